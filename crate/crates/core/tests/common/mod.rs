#![allow(dead_code)]

/// Exhaustive search for block tilings of a window whose first piece may be
/// a suffix and last piece a prefix of either block (the window sits inside
/// a bi-infinite tiling). Tilings may disagree within one block of the edges,
/// so uniqueness is judged on the core `[margin, len - margin]`.
pub struct Tilings {
    /// Every tiling has the same cuts inside the core.
    pub core_unique: bool,
    /// Those cuts, as window offsets.
    pub core_cuts: Vec<usize>,
    /// Offsets that are a cut of at least one tiling.
    pub any_cut: Vec<bool>,
}

fn is_suffix(x: &[u8], w: &[u8]) -> bool {
    x.len() <= w.len() && w[w.len() - x.len()..] == *x
}

fn matches_at(window: &[u8], pos: usize, w: &[u8]) -> bool {
    pos + w.len() <= window.len() && window[pos..pos + w.len()] == *w
}

pub fn tilings(window: &[u8], a: &[u8], b: &[u8], margin: usize) -> Tilings {
    let n = window.len();
    let blocks = [a, b];
    // forward: some tiling of window[..p] ends with a cut at p
    let mut fwd = vec![false; n + 1];
    for p in 1..n {
        let head = &window[..p];
        fwd[p] = is_suffix(head, a)
            || is_suffix(head, b)
            || blocks
                .iter()
                .any(|x| x.len() < p && fwd[p - x.len()] && matches_at(window, p - x.len(), x));
    }
    // backward: window[p..] can be completed after a cut at p
    let mut bwd = vec![false; n + 1];
    for p in (1..n).rev() {
        let rest = &window[p..];
        bwd[p] = a.starts_with(rest)
            || b.starts_with(rest)
            || blocks
                .iter()
                .any(|x| p + x.len() < n && matches_at(window, p, x) && bwd[p + x.len()]);
    }
    let any_cut: Vec<bool> = (0..=n).map(|p| fwd[p] && bwd[p]).collect();
    let edges_from = |p: usize| -> Vec<usize> {
        blocks
            .iter()
            .filter(|x| p + x.len() < n && matches_at(window, p, x) && any_cut[p + x.len()])
            .map(|x| p + x.len())
            .collect()
    };
    let core: Vec<usize> = (margin.max(1)..n.saturating_sub(margin))
        .filter(|&p| any_cut[p])
        .collect();
    let mut core_unique = !core.is_empty();
    for (i, &p) in core.iter().enumerate() {
        let out = edges_from(p);
        if let Some(&next) = core.get(i + 1) {
            core_unique &= out == vec![next];
        }
        // nothing outside the chain may land on a core cut past the first
        if i > 0 {
            let lo = p.saturating_sub(a.len().max(b.len()));
            for q in lo..p {
                if any_cut[q] && q != core[i - 1] && edges_from(q).contains(&p) {
                    core_unique = false;
                }
            }
        }
    }
    Tilings {
        core_unique,
        core_cuts: core,
        any_cut,
    }
}

/// `tr M("101")` at coupling 2, expanded by hand from
/// `tr(T(x)T(y)T(z)) = xyz - x - y - z` with `x = z = E - 2`, `y = E`.
pub fn fibonacci_level3_trace(e: f64) -> f64 {
    ((e - 4.0) * e + 1.0) * e + 4.0
}

/// Root of `f` in `[lo, hi]` by plain bisection; `f(lo)` and `f(hi)` must
/// differ in sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
