use std::sync::OnceLock;

use qdcoupler::coupling::*;
use qdcoupler::emission::*;
use qdcoupler::geometry::*;
use qdcoupler::modesolver::*;
use qdcoupler::pipeline::{CouplerPoint, Simulator};
use qdcoupler::C64;

fn sim() -> &'static Simulator {
    static SIM: OnceLock<Simulator> = OnceLock::new();
    SIM.get_or_init(|| {
        Simulator::new(
            CrossSectionSpec::default(),
            GridSpec::default().with_step(20.0),
            SolverConfig::default(),
        )
        .unwrap()
    })
}

fn point(width: u32) -> &'static CouplerPoint {
    static POINTS: OnceLock<Vec<CouplerPoint>> = OnceLock::new();
    let points = POINTS.get_or_init(|| [190.0, 220.0, 250.0].iter().map(|&w| sim().point(w).unwrap()).collect());
    points.iter().find(|p| p.width_nm == width as f64).unwrap()
}

fn label(family: Family, ordinal: usize) -> ModeLabel {
    ModeLabel { family, ordinal }
}

#[test]
fn two_hex_supermodes_at_190() {
    let b = &point(190).basis;
    let hex: Vec<_> = b.family(Family::HEx).collect();
    assert!(hex.len() >= 2);
    assert_eq!(hex[0].label.to_string(), "hEx_I");
    assert_eq!(hex[1].label.to_string(), "hEx_II");
    assert!(hex[0].n_eff.re > hex[1].n_eff.re);
    assert!(b.get(label(Family::HEy, 1)).is_some());
    assert!(b.get(label(Family::HEy, 2)).is_some());
}

#[test]
fn basis_invariants() {
    for w in [190, 220, 250] {
        let b = &point(w).basis;
        let labels = b.labels();
        for (k, l) in labels.iter().enumerate() {
            assert!(!labels[k + 1..].contains(l), "duplicate {l}");
        }
        for family in [Family::HEx, Family::HEy] {
            let n: Vec<f64> = b.family(family).map(|m| m.n_eff.re).collect();
            assert!(n.windows(2).all(|p| p[0] >= p[1]), "{family} not sorted at W = {w}");
        }
        for m in &b.modes {
            assert!(m.n_eff.re > 1.0 && m.n_eff.re < 3.406, "{}", m.n_eff);
            assert!(m.flux > 0.0);
            assert!(m.guided);
            assert_eq!(m.n_eff.im, 0.0);
            let k0 = 2.0 * std::f64::consts::PI / 1.3;
            assert!((m.beta_rad_per_um - k0 * m.n_eff.re).abs() < 1e-12 * m.beta_rad_per_um);
        }
    }
}

#[test]
fn fundamental_index_grows_with_width() {
    let n: Vec<f64> = [190, 220, 250]
        .iter()
        .map(|&w| point(w).basis.get(label(Family::HEx, 1)).unwrap().n_eff.re)
        .collect();
    assert!(n[0] < n[1] && n[1] < n[2], "{n:?}");
}

#[test]
fn reconstructed_fields_are_divergence_free() {
    for w in [190, 220, 250] {
        for m in &point(w).basis.modes {
            assert!(m.divergence_residual <= 1e-6, "{} at {w}: {}", m.label, m.divergence_residual);
            assert!(m.residual <= 1e-8, "{} at {w}: eigen residual {}", m.label, m.residual);
        }
    }
}

fn mirrored_abs(v: &[C64], row: usize, rows: usize, flip: impl Fn(usize) -> usize) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..rows {
        for i in 0..row {
            worst = worst.max((v[j * row + i].norm() - v[j * row + flip(i)].norm()).abs());
        }
    }
    worst
}

#[test]
fn field_magnitudes_are_mirror_symmetric() {
    for m in &point(220).basis.modes {
        let f = &m.fields;
        let (nx, ny) = (f.nx, f.ny);
        assert_eq!(mirrored_abs(&f.ex, nx, ny + 1, |i| nx - 1 - i), 0.0, "{} ex", m.label);
        assert_eq!(mirrored_abs(&f.ey, nx + 1, ny, |i| nx - i), 0.0, "{} ey", m.label);
        assert_eq!(mirrored_abs(&f.ez, nx + 1, ny + 1, |i| nx - i), 0.0, "{} ez", m.label);
        assert_eq!(mirrored_abs(&f.hz, nx, ny, |i| nx - 1 - i), 0.0, "{} hz", m.label);
    }
}

#[test]
fn phase_convention_peak_is_real_positive() {
    for m in &point(220).basis.modes {
        let f = &m.fields;
        let comp = if m.label.family == Family::HEx { &f.ex } else { &f.ey };
        let peak = comp.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        assert!((peak - C64::new(1.0, 0.0)).norm() < 1e-12, "{}: {peak}", m.label);
    }
}

#[test]
fn full_domain_solve_agrees_with_symmetry_split() {
    let spec = CrossSectionSpec::default().with_width(220.0);
    let grid = GridSpec::default().with_step(20.0);
    let map = rasterize(&spec, &grid).unwrap();
    let cfg = SolverConfig {
        use_symmetry: false,
        count: 8,
        ..SolverConfig::default()
    };
    let full = solve_modes(&map, &cfg).unwrap();
    let split = &point(220).basis;
    for m in &split.modes {
        let other = full.get(m.label).unwrap_or_else(|| panic!("{} missing in full solve", m.label));
        assert!((other.n_eff.re - m.n_eff.re).abs() < 1e-9, "{}", m.label);
    }
}

#[test]
fn classification_of_pure_and_tied_polarizations() {
    let mut f = point(190).basis.modes[0].fields.clone();
    f.ey.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
    assert_eq!(classify(&f), (Family::HEx, false));
    // equal polarization integrals
    let n = f.ex.len().min(f.ey.len());
    f.ex.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
    for k in 0..n {
        f.ex[k] = C64::new(1.0, 0.0);
        f.ey[k] = C64::new(0.0, 1.0);
    }
    let (_, ambiguous) = classify(&f);
    assert!(ambiguous);
    assert_eq!(classify_fraction(0.51).1, true);
    assert_eq!(classify_fraction(0.6), (Family::HEx, false));
    assert_eq!(classify_fraction(0.2), (Family::HEy, false));
}

#[test]
fn tracking_identity_and_permutation() {
    let b = &point(220).basis;
    let same = track(b, b).unwrap();
    assert_eq!(same.labels(), b.labels());
    for (a, c) in b.modes.iter().zip(&same.modes) {
        assert_eq!(a.n_eff, c.n_eff);
    }
    // scrambled labels are restored by field continuity
    let mut scrambled = b.clone();
    let hex: Vec<usize> = (0..b.modes.len()).filter(|&k| b.modes[k].label.family == Family::HEx).collect();
    let (p, q) = (hex[0], hex[1]);
    let (lp, lq) = (scrambled.modes[p].label, scrambled.modes[q].label);
    scrambled.modes[p].label = lq;
    scrambled.modes[q].label = lp;
    let fixed = track(b, &scrambled).unwrap();
    for m in &b.modes {
        assert_eq!(fixed.get(m.label).unwrap().n_eff, m.n_eff);
    }
}

#[test]
fn tracking_allocates_label_for_new_mode() {
    let b = &point(220).basis;
    let mut prev = b.clone();
    let dropped = label(Family::HEy, 1);
    prev.modes.retain(|m| m.label != dropped);
    let tracked = track(&prev, b).unwrap();
    assert_eq!(tracked.modes.len(), b.modes.len());
    let max_prev = prev.family(Family::HEy).map(|m| m.label.ordinal).max().unwrap_or(0);
    let fresh = tracked.family(Family::HEy).find(|m| m.label.ordinal == max_prev + 1).unwrap();
    assert_eq!(fresh.n_eff, b.get(dropped).unwrap().n_eff);
    for m in &prev.modes {
        assert_eq!(tracked.get(m.label).unwrap().n_eff, m.n_eff);
    }
    assert!(tracked.warnings.iter().any(|w| w.contains("appeared")));
}

#[test]
fn tracking_follows_continuity_across_widths() {
    let a = point(190);
    let b = sim().tracked(a, point(220).clone()).unwrap();
    let c = sim().tracked(&b, point(250).clone()).unwrap();
    assert_eq!(c.basis.modes.len(), point(250).basis.modes.len());
    assert!(c.basis.get(label(Family::HEx, 1)).is_some());
}

#[test]
fn fiber_self_overlap_is_one() {
    let fibers = &sim().fibers;
    for fm in [&fibers.x, &fibers.y] {
        let f = fiber_fraction_raw(&fm.fields, fm).unwrap();
        assert!((f - 1.0).abs() < 1e-12, "{f}");
        assert!(fm.flux > 0.0);
    }
    assert_eq!(fibers.x.polarization, Family::HEx);
    assert_eq!(fibers.y.polarization, Family::HEy);
}

#[test]
fn orthogonal_polarization_has_small_fraction() {
    let fibers = &sim().fibers;
    for w in [190, 220, 250] {
        for m in point(w).basis.family(Family::HEy) {
            let f = fiber_fraction(&m.fields, &fibers.x).unwrap();
            assert!(f <= 0.05, "{} at {w}: {f}", m.label);
        }
        for m in point(w).basis.family(Family::HEx) {
            let f = fiber_fraction(&m.fields, &fibers.y).unwrap();
            assert!(f <= 0.05, "{} at {w}: {f}", m.label);
        }
    }
}

#[test]
fn fractions_bounded_and_ordered() {
    for w in [190, 220, 250] {
        let t = &point(w).coupling;
        for e in &t.entries {
            assert!(e.raw_fraction <= 1.0 + FRACTION_SLACK, "{} at {w}: {}", e.label, e.raw_fraction);
            assert!((0.0..=1.0).contains(&e.fraction));
        }
        for family in [Family::HEx, Family::HEy] {
            assert!(t.family_sum(family) <= 1.02, "{family} at {w}: {}", t.family_sum(family));
        }
    }
    let f = |w, o| point(w).coupling.get(label(Family::HEx, o)).unwrap().fraction;
    assert!(f(190, 1) > f(190, 2));
    assert!(f(250, 1) < f(250, 2));
}

#[test]
fn grid_mismatch_is_reported() {
    let coarse = GridSpec::default().with_step(40.0);
    let other = fiber_modes(&CrossSectionSpec::default(), &coarse, &SolverConfig::default()).unwrap();
    let m = &point(220).basis.modes[0];
    assert!(matches!(
        fiber_fraction(&m.fields, &other.x),
        Err(qdcoupler::CouplerError::GridMismatch(_))
    ));
}

fn rescaled(m: &Supermode, c: C64) -> Supermode {
    let mut out = m.clone();
    out.fields.scale(c);
    out.flux = power_flux(&out.fields);
    out
}

#[test]
fn flux_is_quadratic_in_field_scale() {
    let m = &point(220).basis.modes[0];
    let c = C64::new(-0.3, 2.1);
    assert!((power_flux(&m.fields.scaled(c)) - c.norm_sqr() * m.flux).abs() < 1e-12 * c.norm_sqr() * m.flux);
}

#[test]
fn fraction_and_rate_invariant_under_rescaling() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let fibers = &sim().fibers;
    let dipole = DipoleSpec::centered(DipoleAxis::X).with_angle(0.4);
    for m in &point(220).basis.modes {
        let f0 = fiber_fraction_raw(&m.fields, fibers.get(m.label.family)).unwrap();
        let r0 = guided_rate(m, &dipole, 3.406, 1.3, Direction::Forward).unwrap();
        for _ in 0..5 {
            let c = C64::from_polar(rng.gen_range(0.1..10.0), rng.gen_range(-3.0..3.0));
            let s = rescaled(m, c);
            let fiber = fibers.get(m.label.family);
            let cf = C64::from_polar(rng.gen_range(0.1..10.0), rng.gen_range(-3.0..3.0));
            let sf = FiberMode {
                fields: fiber.fields.scaled(cf),
                flux: power_flux(&fiber.fields.scaled(cf)),
                ..fiber.clone()
            };
            let f = fiber_fraction_raw(&s.fields, &sf).unwrap();
            assert!((f - f0).abs() < 1e-10, "{}: {f} vs {f0}", m.label);
            let r = guided_rate(&s, &dipole, 3.406, 1.3, Direction::Forward).unwrap();
            assert!((r.rate - r0.rate).abs() <= 1e-10 * r0.rate.max(1e-300), "{}", m.label);
        }
    }
}

#[test]
fn x_dipole_does_not_excite_hey_at_centre() {
    let d = DipoleSpec::centered(DipoleAxis::X);
    let b = &point(220).basis;
    let scale = guided_rate(b.get(label(Family::HEx, 1)).unwrap(), &d, 3.406, 1.3, Direction::Forward)
        .unwrap()
        .rate;
    for m in b.family(Family::HEy) {
        let r = guided_rate(m, &d, 3.406, 1.3, Direction::Forward).unwrap();
        assert!(r.rate <= 1e-20 * scale, "{}: {}", m.label, r.rate);
    }
}

#[test]
fn lone_mode_without_radiation_has_half_beta_factor() {
    let mut b = point(220).basis.clone();
    b.modes.truncate(1);
    let t = rate_table(&b, &DipoleSpec::centered(DipoleAxis::X), 3.406, &RadiationModel::explicit(0.0).unwrap()).unwrap();
    assert!((t.entries[0].gamma_forward - 0.5).abs() < 1e-15);
    assert!((t.entries[0].gamma_backward - 0.5).abs() < 1e-15);
    assert!((t.guided_fraction() - 1.0).abs() < 1e-15);
}

#[test]
fn beta_factors_bounded() {
    let rad = sim()
        .calibrate(point(220), &DipoleSpec::centered(DipoleAxis::X), 0.73)
        .unwrap();
    for w in [190, 220, 250] {
        for axis in [DipoleAxis::X, DipoleAxis::Z] {
            let t = sim().rates(point(w), &DipoleSpec::centered(axis), &rad).unwrap();
            let mut sum = 0.0;
            for e in &t.entries {
                for g in [e.gamma_forward, e.gamma_backward] {
                    assert!((0.0..=0.5).contains(&g), "{} at {w}: {g}", e.label);
                    sum += g;
                }
            }
            assert!(sum <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn calibration_hits_target_and_rejects_bad_targets() {
    let d = DipoleSpec::centered(DipoleAxis::X);
    let rad = sim().calibrate(point(220), &d, 0.73).unwrap();
    let t = sim().rates(point(220), &d, &rad).unwrap();
    assert!((t.guided_fraction() - 0.73).abs() < 1e-12);
    assert!(RadiationModel::calibrate(0.0, 1.0).is_err());
    assert!(RadiationModel::calibrate(1.2, 1.0).is_err());
    assert!(RadiationModel::explicit(-1.0).is_err());
}

#[test]
fn dipole_outside_channel_is_rejected() {
    let d = DipoleSpec {
        x_nm: 400.0,
        ..DipoleSpec::centered(DipoleAxis::X)
    };
    let rad = RadiationModel::explicit(0.1).unwrap();
    assert!(sim().rates(point(220), &d, &rad).is_err());
    let tilted = DipoleSpec {
        orientation: [0.0, 1.0, 0.0],
        ..DipoleSpec::centered(DipoleAxis::X)
    };
    assert!(tilted.validate(&CrossSectionSpec::default()).is_err());
}

#[test]
fn collection_bounded_by_incoherent_budget() {
    let d = DipoleSpec::centered(DipoleAxis::X);
    let rad = sim().calibrate(point(220), &d, 0.73).unwrap();
    let zs = linspace(1.0, 5.0, 201);
    for w in [190, 220, 250] {
        let p = point(w);
        let t = sim().rates(p, &d, &rad).unwrap();
        let c = collection_efficiency(&p.basis, &p.coupling, &t, &zs).unwrap();
        let modes = p.basis.modes.len() as f64;
        for &e in &c.eta_total {
            assert!(e <= 1.0 + 1e-12 && e >= 0.0);
            assert!(e <= c.incoherent * modes + 1e-12);
        }
        assert!(c.max >= c.incoherent * 0.5);
        let contrib: f64 = supermode_contributions(&p.coupling, &t).iter().map(|x| x.1).sum();
        assert!((contrib - c.incoherent).abs() < 1e-12);
    }
}
