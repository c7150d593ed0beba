use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::linalg::{norm2, sub};
use crate::model::{Model, SequenceInput};
use crate::solvers::SolverConfig;

use super::H_BOUND_MARGIN;

/// A pair of points `y = [h, x]` of the one-step map.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzProbe {
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
}

/// Internal states after every step of `seq`, the initial state first.
pub fn hidden_states(
    model: &Model,
    cfg: &SolverConfig,
    seq: &SequenceInput,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let mut state = model.initial_state(&seq.initial)?;
    let mut prev = model.readout(&state)?;
    let mut out = vec![state.clone()];
    for (t, x) in seq.inputs.iter().enumerate() {
        let dt = seq.step_dt(cfg, t)?;
        let x = if seq.feedback { &prev } else { x };
        state = model.step(cfg, &state, x, dt)?;
        prev = model.readout(&state)?;
        out.push(state.clone());
    }
    Ok(out)
}

/// Per-neuron `max |h_i|` over the hidden trajectories of `seqs`, times the margin.
pub fn default_h_bound(
    model: &Model,
    cfg: &SolverConfig,
    seqs: &[SequenceInput],
) -> Result<Vec<f64>> {
    let m = model.spec.m;
    let mut bound = vec![0.0f64; m];
    for seq in seqs {
        for h in hidden_states(model, cfg, seq)? {
            for (b, v) in bound.iter_mut().zip(&h[..m]) {
                *b = b.max(v.abs());
            }
        }
    }
    if bound.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonFinite {
            context: "hidden-state envelope",
            index: 0,
        });
    }
    Ok(bound.into_iter().map(|b| b * H_BOUND_MARGIN).collect())
}

/// `count` pairs with centers `h ~ U[-h_bound, h_bound]`, `x ~ U[-x_range, x_range]`
/// and the partner displaced by a random direction of length `radius`. The
/// displaced `h` is clamped back into the box.
pub fn lipschitz_probes(
    h_bound: &[f64],
    n: usize,
    x_range: f64,
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<LipschitzProbe>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "probe radius must be > 0, got {radius}"
        )));
    }
    let m = h_bound.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fn sym(r: f64, rng: &mut ChaCha8Rng) -> f64 {
        if r > 0.0 {
            rng.random_range(-r..=r)
        } else {
            0.0
        }
    }
    let mut probes = Vec::with_capacity(count);
    while probes.len() < count {
        let mut y1: Vec<f64> = h_bound.iter().map(|&b| sym(b, &mut rng)).collect();
        y1.extend((0..n).map(|_| sym(x_range, &mut rng)));
        let dir: Vec<f64> = (0..m + n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let len = norm2(&dir);
        if len == 0.0 {
            continue;
        }
        let y2: Vec<f64> = y1
            .iter()
            .zip(&dir)
            .enumerate()
            .map(|(j, (y, d))| {
                let v = y + radius * d / len;
                if j < m {
                    v.clamp(-h_bound[j], h_bound[j])
                } else {
                    v
                }
            })
            .collect();
        probes.push(LipschitzProbe { y1, y2 });
    }
    Ok(probes)
}

/// `max ||o(y1) - o(y2)|| / ||y1 - y2||` over the probes, where `o` reads out
/// the state after one step of length `cfg.dt` from `y = [h, x]`.
/// Coincident pairs are skipped.
pub fn empirical_lipschitz(
    model: &Model,
    cfg: &SolverConfig,
    probes: &[LipschitzProbe],
) -> Result<f64> {
    let (m, n) = (model.spec.state_len(), model.spec.n);
    let map = |y: &[f64]| -> Result<Vec<f64>> {
        let next = model.step(cfg, &y[..m], &y[m..], cfg.dt)?;
        model.readout(&next)
    };
    let mut worst = 0.0f64;
    for p in probes {
        check_len("probe", m + n, p.y1.len())?;
        check_len("probe", m + n, p.y2.len())?;
        let dy = norm2(&sub(&p.y1, &p.y2));
        if dy == 0.0 {
            continue;
        }
        let d_o = norm2(&sub(&map(&p.y1)?, &map(&p.y2)?));
        worst = worst.max(d_o / dy);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{lipschitz_bound, lrc_model_from_stc};
    use crate::cells::LiquidCellParams;
    use crate::linalg::{spectral_norm, Matrix};
    use crate::math::ElastanceKind;
    use crate::model::{ModelKind, ModelSpec};
    use proptest::prelude::*;

    #[test]
    fn constant_readout_gives_zero() {
        let mut model = Model::init(ModelSpec::new(ModelKind::Stc, 3, 2, 2), 0).unwrap();
        model.output.as_mut().unwrap().q = Matrix::zeros(2, 3);
        let probes = lipschitz_probes(&[1.0; 3], 2, 1.0, 1e-3, 50, 0).unwrap();
        let cfg = SolverConfig::explicit_euler(1, 0.5);
        assert_eq!(empirical_lipschitz(&model, &cfg, &probes).unwrap(), 0.0);
    }

    #[test]
    fn coincident_pairs_are_skipped() {
        let model = Model::init(ModelSpec::new(ModelKind::Stc, 2, 1, 1), 0).unwrap();
        let y = vec![0.1, 0.2, 0.3];
        let probes = [LipschitzProbe {
            y1: y.clone(),
            y2: y,
        }];
        let cfg = SolverConfig::explicit_euler(1, 0.5);
        assert_eq!(empirical_lipschitz(&model, &cfg, &probes).unwrap(), 0.0);
    }

    #[test]
    fn linear_map_approaches_spectral_norm() {
        // zero cell and a vanishing step: h' = h to first order, so o = Q h
        let mut model = Model::init(ModelSpec::new(ModelKind::Stc, 3, 0, 2), 4).unwrap();
        *model.liquid_mut().unwrap() = LiquidCellParams::zeros(3, 0);
        let q = model.output.as_ref().unwrap().q.clone();
        let cfg = SolverConfig::explicit_euler(1, 1e-12);
        let probes = lipschitz_probes(&[1.0; 3], 0, 0.0, 1e-6, 4000, 1).unwrap();
        let emp = empirical_lipschitz(&model, &cfg, &probes).unwrap();
        let v = nalgebra::DMatrix::from_row_slice(2, 3, q.as_slice());
        let oracle = v.svd(false, false).singular_values.max();
        assert!(emp <= oracle * (1.0 + 1e-6));
        assert!(emp > 0.97 * oracle, "{emp} vs {oracle}");
        assert!((spectral_norm(&q, 1e-12, 10_000).unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn envelope_covers_trajectories() {
        let model = Model::init(ModelSpec::new(ModelKind::Stc, 3, 1, 1), 2).unwrap();
        let cfg = SolverConfig::explicit_euler(1, 0.5);
        let seq = SequenceInput::new((0..30).map(|t| vec![(t as f64 * 0.3).sin()]).collect());
        let hb = default_h_bound(&model, &cfg, std::slice::from_ref(&seq)).unwrap();
        for h in hidden_states(&model, &cfg, &seq).unwrap() {
            for (v, b) in h.iter().zip(&hb) {
                assert!(v.abs() * H_BOUND_MARGIN <= *b + 1e-15);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn measurement_never_exceeds_certified_bound(
            seed in any::<u64>(),
            m in 1usize..=4,
            n in 0usize..=3,
            lrc in any::<bool>(),
            dt in 0.05f64..1.5,
            hb in 0.1f64..3.0,
        ) {
            let stc = Model::init(ModelSpec::new(ModelKind::Stc, m, n, 2), seed).unwrap();
            let model = if lrc {
                lrc_model_from_stc(&stc, ElastanceKind::Symmetric, 0.5, seed).unwrap()
            } else {
                stc
            };
            let h_bound = vec![hb; m];
            let bound = lipschitz_bound(&model, dt, &h_bound).unwrap().lambda;
            let cfg = SolverConfig::explicit_euler(1, dt);
            let probes = lipschitz_probes(&h_bound, n, 1.0, 1e-5, 200, seed).unwrap();
            let emp = empirical_lipschitz(&model, &cfg, &probes).unwrap();
            prop_assert!(emp <= bound * (1.0 + 1e-6), "{emp} > {bound}");
        }
    }

    #[test]
    fn paired_models_stay_below_their_bounds() {
        // The one-step map of the STC contracts through -sigma(f) h, which the
        // bound replaces by |.| <= 1, so the measured ordering of a pair can
        // reverse even though the certified ordering always holds.
        for seed in 0..10 {
            let stc = Model::init(ModelSpec::new(ModelKind::Stc, 4, 2, 2), seed).unwrap();
            let lrc = lrc_model_from_stc(&stc, ElastanceKind::Symmetric, 0.5, seed).unwrap();
            let cfg = SolverConfig::explicit_euler(1, 1.0);
            let hb = [1.0; 4];
            let probes = lipschitz_probes(&hb, 2, 1.0, 1e-5, 300, seed).unwrap();
            let es = empirical_lipschitz(&stc, &cfg, &probes).unwrap();
            let er = empirical_lipschitz(&lrc, &cfg, &probes).unwrap();
            let bs = lipschitz_bound(&stc, 1.0, &hb).unwrap().lambda;
            let br = lipschitz_bound(&lrc, 1.0, &hb).unwrap().lambda;
            assert!(br < bs);
            assert!(
                es <= bs && er <= br,
                "seed {seed}: {es} / {bs}, {er} / {br}"
            );
        }
    }
}
