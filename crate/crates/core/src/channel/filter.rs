//! Layer 1 and layer 3 measurement filtering, both in the dB domain.

use ndarray::Array2;

use super::{ChannelError, FilterConfig, Trace};
use crate::Scalar;

/// IIR smoothing coefficient `a = 1/2^(k/4)`; `k = 0` gives `a = 1`.
pub fn l3_coefficient<S: Scalar>(l3_k: u32) -> S {
    S::from_f64((-(l3_k as f64) / 4.0).exp2())
}

/// First-order IIR filter over one measurement series:
/// `F_0 = M_0`, `F_n = (1 - a) * F_(n-1) + a * M_n`.
pub fn l3_filter<S: Scalar>(series: &[S], cfg: &FilterConfig) -> Vec<S> {
    let a = l3_coefficient::<S>(cfg.l3_k);
    let mut out = Vec::with_capacity(series.len());
    let mut prev = S::zero();
    for (n, &m) in series.iter().enumerate() {
        let f = if n == 0 { m } else { (S::one() - a) * prev + a * m };
        out.push(f);
        prev = f;
    }
    out
}

/// Applies [`l3_filter`] to every station column of a `[ticks, stations]`
/// matrix.
pub fn l3_filter_matrix<S: Scalar>(m: &Array2<S>, cfg: &FilterConfig) -> Array2<S> {
    let (t, n) = m.dim();
    let mut out = Array2::<S>::zeros((t, n));
    for i in 0..n {
        let col: Vec<S> = m.column(i).to_vec();
        for (row, v) in l3_filter(&col, cfg).into_iter().enumerate() {
            out[[row, i]] = v;
        }
    }
    out
}

/// Causal moving average over `l1_window` ticks, applied to both the RSRP
/// and SINR matrices of a trace. Early ticks average over the partial
/// window available so far; a window of 1 is the identity.
pub fn l1_filter<S: Scalar>(trace: &Trace<S>, cfg: &FilterConfig) -> Result<Trace<S>, ChannelError> {
    cfg.validate()?;
    let mut out = trace.clone();
    out.rsrp_dbm = moving_average(&trace.rsrp_dbm, cfg.l1_window);
    out.sinr_db = moving_average(&trace.sinr_db, cfg.l1_window);
    out.meta.l1_window = Some(cfg.l1_window);
    Ok(out)
}

fn moving_average<S: Scalar>(m: &Array2<S>, window: usize) -> Array2<S> {
    let (t_len, n) = m.dim();
    let mut out = Array2::<S>::zeros((t_len, n));
    for i in 0..n {
        for t in 0..t_len {
            let start = t + 1 - window.min(t + 1);
            let mut acc = S::zero();
            for u in start..=t {
                acc += m[[u, i]];
            }
            out[[t, i]] = acc / S::from_usize(t - start + 1);
        }
    }
    out
}
