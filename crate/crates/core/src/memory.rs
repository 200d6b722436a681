/// Bytes needed for the interconnect parameters of one layer.
///
/// Returns `(dense, sparse)`: the dense variant stores an `f32` weight for
/// every (gate, slot, input) triple, `k * G * I * 4`. The candidate-set
/// variant stores `C` weights plus `C` 32-bit indices per slot,
/// `k * G * C * 4 * 2`.
pub fn estimate_interconnect_memory(gates: u64, inputs: u64, arity: u64, candidates: u64) -> (u64, u64) {
    let full = arity * gates * inputs * 4;
    let sparse = arity * gates * candidates * 4 * 2;
    (full, sparse)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_case() {
        assert_eq!(estimate_interconnect_memory(1, 1, 1, 1), (4, 8));
    }

    #[test]
    fn ratio_is_two_c_over_i() {
        for g in [1u64, 7, 1500, 12_000, 24_000] {
            let (full, sparse) = estimate_interconnect_memory(g, 30_720, 2, 8);
            // sparse / full == 2C / I  <=>  sparse * I == full * 2C
            assert_eq!(sparse * 30_720, full * 16);
        }
    }
}
