//! Event A3 entering and leaving conditions on L3-filtered RSRP.

use super::A3Config;
use crate::Scalar;

/// Entering condition: the neighbor, after offsets and hysteresis, is
/// strictly better than the serving cell plus the A3 offset.
///
/// `M_n + Off_n + Off_cn - Hys > M_p + Off_p + Off_cp + Off`
pub fn a3_entering<S: Scalar>(m_n_dbm: S, m_p_dbm: S, cfg: &A3Config<S>) -> bool {
    m_n_dbm + cfg.off_n_db + cfg.off_cn_db - cfg.hys_db
        > m_p_dbm + cfg.off_p_db + cfg.off_cp_db + cfg.off_db
}

/// Leaving condition, the mirrored inequality with the hysteresis sign
/// flipped. With positive hysteresis it can never hold together with
/// [`a3_entering`] on the same inputs.
///
/// `M_n + Off_n + Off_cn + Hys < M_p + Off_p + Off_cp + Off`
pub fn a3_leaving<S: Scalar>(m_n_dbm: S, m_p_dbm: S, cfg: &A3Config<S>) -> bool {
    m_n_dbm + cfg.off_n_db + cfg.off_cn_db + cfg.hys_db
        < m_p_dbm + cfg.off_p_db + cfg.off_cp_db + cfg.off_db
}
