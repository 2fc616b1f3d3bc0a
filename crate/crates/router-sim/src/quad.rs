//! Globally adaptive Gauss–Kronrod quadrature on finite intervals.
//!
//! A 7-point Gauss rule embedded in a 15-point Kronrod rule supplies the
//! per-panel error estimate; the panel with the largest estimate is bisected
//! until the summed estimate drops below the requested tolerance. All the
//! integrands in this crate are smooth (at worst mildly oscillatory or
//! sharply peaked near a known scale), so the classic QK15 scheme is enough.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Positive abscissae of the 15-point Kronrod rule on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Weights of the embedded 7-point Gauss rule (odd Kronrod abscissae).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Node `i` of the 15-point Kronrod rule on [-1, 1] with its weight,
/// i ∈ 0..15 running across the interval. Exposed for fixed-panel product
/// integration where the caller owns the panel layout.
pub fn kronrod_node(i: usize) -> (f64, f64) {
    assert!(i < 15);
    let j = if i < 8 { i } else { 14 - i };
    let x = if i < 7 { -XGK[j] } else { XGK[j] };
    (x, WGK[j])
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Summed per-panel error estimate (conservative).
    pub abs_error: f64,
    /// Number of integrand evaluations spent.
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    seq: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error && self.seq == other.seq
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // Largest error first; insertion order breaks ties so the heap is
        // fully deterministic.
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn qk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = half * XGK[j];
        let fsum = f(center - x) + f(center + x);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    kronrod *= half;
    gauss *= half;
    // GSL-style sharpened error estimate would rescale by the integrand's
    // mean deviation; the plain difference is conservative and cheap.
    let err = (kronrod - gauss).abs().max(f64::EPSILON * kronrod.abs());
    (kronrod, err)
}

/// Integrate `f` over `[a, b]` to absolute tolerance `abs_tol` (or relative
/// tolerance `rel_tol`, whichever is looser), optionally pre-splitting at
/// `breaks` to help the subdivision find known small-scale features.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    breaks: &[f64],
    max_panels: usize,
) -> QuadResult {
    assert!(b >= a, "integration bounds out of order");
    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    let mut seq = 0usize;
    let mut evals = 0usize;

    let mut edges: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    edges.push(a);
    for &x in breaks {
        if x > a && x < b {
            edges.push(x);
        }
    }
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in edges.windows(2) {
        let (v, e) = qk15(&mut f, w[0], w[1]);
        evals += 15;
        total += v;
        total_err += e;
        heap.push(Panel { a: w[0], b: w[1], value: v, error: e, seq });
        seq += 1;
    }

    let tol = |value: f64| abs_tol.max(rel_tol * value.abs());
    while total_err > tol(total) && heap.len() < max_panels {
        let worst = heap.pop().expect("heap cannot be empty here");
        if worst.b - worst.a < f64::EPSILON * (worst.a.abs() + worst.b.abs() + 1.0) {
            // Panel cannot be meaningfully split; put it back and stop.
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = qk15(&mut f, worst.a, mid);
        let (v2, e2) = qk15(&mut f, mid, worst.b);
        evals += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1, seq });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2, seq: seq + 1 });
        seq += 2;
    }

    // Re-sum from the panels to shed the cancellation accumulated by the
    // incremental updates above.
    let panels: Vec<Panel> = heap.into_sorted_vec();
    let value = panels.iter().map(|p| p.value).sum();
    let abs_error = panels.iter().map(|p| p.error).sum();
    QuadResult { value, abs_error, evaluations: evals }
}

/// [`integrate_with_breaks`] without pre-splitting.
pub fn integrate<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> QuadResult {
    integrate_with_breaks(f, a, b, abs_tol, rel_tol, &[], max_panels)
}
