//! Helpers shared by the integration suites.
// each test binary uses its own subset of these
#![allow(dead_code)]

use ibac::PolicySchema;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The seven-label universe used by the worked examples: four levels and
/// three compartments, codes auto-assigned in declaration order.
pub fn mi_schema() -> PolicySchema {
    PolicySchema::build("mi-universe")
        .levels(["TopSecret", "Secret", "Protected", "Public"])
        .compartments(["GCHQ", "MI5", "MI6"])
        .finish()
}

/// Deterministic RNG so failures replay byte for byte.
pub fn seeded_rng(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x1bac ^ salt)
}

/// Print the per-criterion verdict line whether the body passes or
/// panics, then let the panic propagate so cargo still reports a failure.
pub fn criterion(number: u32, name: &str, body: impl FnOnce() + std::panic::UnwindSafe) {
    match std::panic::catch_unwind(body) {
        Ok(()) => println!("acceptance {number} {name}: PASS"),
        Err(panic) => {
            println!("acceptance {number} {name}: FAIL");
            std::panic::resume_unwind(panic);
        }
    }
}
