//! Seeded fixtures shared by the benchmarks.

use dronesched::milp::MilpModel;
use dronesched::synthetic::{random_binary_milp, random_instance, SyntheticSpec};
use dronesched::{Instance, ObjectiveKind, ObjectiveSelection};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Two-depot fleet instance with `customers` customers.
pub fn fleet(customers: usize, seed: u64) -> Instance {
    random_instance(&mut ChaCha8Rng::seed_from_u64(seed), &SyntheticSpec::fleet(customers))
}

/// Instance small enough for exhaustive enumeration.
pub fn tiny(seed: u64) -> Instance {
    random_instance(&mut ChaCha8Rng::seed_from_u64(seed), &SyntheticSpec::tiny(4, 2, 2, 2))
}

pub fn binary_program(n: usize, m: usize, seed: u64) -> MilpModel {
    random_binary_milp(&mut ChaCha8Rng::seed_from_u64(seed), n, m)
}

/// Minimum cost with the unsuccessful share capped at `eps_u` percent.
pub fn capped_cost(eps_u: f64) -> ObjectiveSelection {
    let mut sel = ObjectiveSelection::unconstrained(ObjectiveKind::Cost);
    sel.eps_u = Some(eps_u);
    sel
}
