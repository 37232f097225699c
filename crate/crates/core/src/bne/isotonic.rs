/// Least-squares projection onto nondecreasing sequences (pool adjacent
/// violators, unit weights). Already-monotone input is returned unchanged.
pub fn isotonic_nondecreasing(values: &[f64]) -> Vec<f64> {
    if values.windows(2).all(|w| w[0] <= w[1]) {
        return values.to_vec();
    }
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / c0 as f64 <= s1 / c1 as f64 {
                break;
            }
            blocks.pop();
            let last = blocks.len() - 1;
            blocks[last] = (s0 + s1, c0 + c1);
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (s, c) in blocks {
        out.extend(std::iter::repeat_n(s / c as f64, c));
    }
    out
}
