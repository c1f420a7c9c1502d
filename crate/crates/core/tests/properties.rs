use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use risorch_core::codebook::{smooth_influence, CodebookEntry};
use risorch_core::field::{
    direct_field, snr_db, solve_incident_field, total_field, FieldVector, IncidentSolver, RisState,
};
use risorch_core::geometry::build_geometry;
use risorch_core::math::{wrap_phase, Complex64};
use risorch_core::orchestrator::{
    admit, allocate, allocate_baseline, apply_energy_off, quantize_phase, AdmissionPolicy,
    AllocParams, CommonConfig, EEParams, Tier, TierTable,
};
use risorch_core::scene::{Neighborhood, PanelSpec, SceneConfig, Wall};
use risorch_core::stats::{pearson, spearman};
use risorch_core::Vec3;

fn entry(phases: Vec<f64>, influence: Vec<f64>) -> CodebookEntry {
    CodebookEntry {
        location: Vec3::new(0.5, 0.5, 0.5),
        phases,
        influence,
        optimal_snr: 0.0,
    }
}

/// K users over N elements: phases, influences and tier indices.
fn users(max_n: usize, max_k: usize) -> impl Strategy<Value = (Vec<CodebookEntry>, Vec<u8>)> {
    (1..=max_n, 1..=max_k).prop_flat_map(|(n, k)| {
        let e = (
            prop::collection::vec(-PI..PI, n),
            prop::collection::vec(0.0..=1.0f64, n),
        )
            .prop_map(|(p, v)| entry(p, v));
        (prop::collection::vec(e, k), prop::collection::vec(1u8..=5, k))
    })
}

fn tier_list(table: &TierTable, idx: &[u8]) -> Vec<Tier> {
    idx.iter().map(|i| table.tier(*i).unwrap()).collect()
}

/// Literal per-element, per-state, per-user accumulation.
fn reference_allocate(
    entries: &[CodebookEntry],
    payment: &[f64],
    p: &AllocParams,
    influence_aware: bool,
) -> Vec<u16> {
    let levels = 1usize << p.bits;
    let n = entries[0].phases.len();
    let nearest = |phi: f64| -> usize {
        let mut best = 0;
        let mut best_d = f64::MAX;
        for s in 0..levels {
            let level = 2.0 * PI * s as f64 / levels as f64;
            let mut d = (phi - level).rem_euclid(2.0 * PI);
            if d > PI {
                d = 2.0 * PI - d;
            }
            if d < best_d - 1e-12 {
                best = s;
                best_d = d;
            }
        }
        best
    };
    let mut out = Vec::with_capacity(n);
    for el in 0..n {
        let max_v = entries.iter().map(|e| e.influence[el]).fold(0.0, f64::max);
        let eta = if !influence_aware || max_v <= p.tau_low {
            0.0
        } else if max_v >= p.tau_high {
            1.0
        } else {
            (max_v - p.tau_low) / (p.tau_high - p.tau_low)
        };
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for s in 0..levels {
            let mut w = Vec::new();
            for (e, pf) in entries.iter().zip(payment) {
                if nearest(e.phases[el]) == s {
                    let a = pf.powf(p.tier_exponent);
                    w.push((1.0 - eta) * a + eta * a * (p.epsilon + e.influence[el]).powf(p.influence_exponent));
                }
            }
            // ascending, the order the tally is defined in
            w.sort_by(f64::total_cmp);
            let score: f64 = w.iter().sum();
            if score > best_score {
                best = s;
                best_score = score;
            }
        }
        out.push(best as u16);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn allocation_matches_reference((es, ts) in users(4, 3), bits in 1u8..=2, pf in prop::array::uniform5(0.5..6.0f64)) {
        let table = TierTable { payment: pf };
        let params = AllocParams::default().with_bits(bits);
        let refs: Vec<&CodebookEntry> = es.iter().collect();
        let tiers = tier_list(&table, &ts);
        let payment: Vec<f64> = tiers.iter().map(|t| t.payment()).collect();
        let cc = allocate(&refs, &tiers, &params).unwrap();
        prop_assert_eq!(cc.states(), &reference_allocate(&es, &payment, &params, true)[..]);
        let base = allocate_baseline(&refs, &tiers, &params).unwrap();
        prop_assert_eq!(base.states(), &reference_allocate(&es, &payment, &params, false)[..]);
    }

    #[test]
    fn payment_scaling_keeps_allocation((es, ts) in users(6, 5), bits in 1u8..=4, c in prop::sample::select(vec![0.25, 0.5, 2.0, 4.0, 8.0])) {
        // power-of-two factors scale every weight exactly
        let params = AllocParams::default().with_bits(bits);
        let refs: Vec<&CodebookEntry> = es.iter().collect();
        let a = TierTable::default();
        let b = TierTable { payment: a.payment.map(|p| p * c) };
        let x = allocate(&refs, &tier_list(&a, &ts), &params).unwrap();
        let y = allocate(&refs, &tier_list(&b, &ts), &params).unwrap();
        prop_assert_eq!(x, y);
    }

    #[test]
    fn user_order_is_irrelevant((es, ts) in users(6, 6), bits in 1u8..=4, seed in any::<u64>()) {
        let params = AllocParams::default().with_bits(bits);
        let table = TierTable::default();
        let mut order: Vec<usize> = (0..es.len()).collect();
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let refs: Vec<&CodebookEntry> = es.iter().collect();
        let perm: Vec<&CodebookEntry> = order.iter().map(|i| &es[*i]).collect();
        let ts_perm: Vec<u8> = order.iter().map(|i| ts[*i]).collect();
        let tiers = tier_list(&table, &ts);
        let tiers_perm = tier_list(&table, &ts_perm);
        prop_assert_eq!(
            allocate(&refs, &tiers, &params).unwrap(),
            allocate(&perm, &tiers_perm, &params).unwrap()
        );
        prop_assert_eq!(
            allocate_baseline(&refs, &tiers, &params).unwrap(),
            allocate_baseline(&perm, &tiers_perm, &params).unwrap()
        );
    }

    #[test]
    fn low_influence_regime_is_baseline((mut es, ts) in users(6, 5), bits in 1u8..=4) {
        let params = AllocParams::default().with_bits(bits);
        for e in &mut es {
            for v in &mut e.influence {
                *v *= params.tau_low;
            }
        }
        let refs: Vec<&CodebookEntry> = es.iter().collect();
        let tiers = tier_list(&TierTable::default(), &ts);
        prop_assert_eq!(
            allocate(&refs, &tiers, &params).unwrap(),
            allocate_baseline(&refs, &tiers, &params).unwrap()
        );
    }

    #[test]
    fn off_set_grows_with_threshold((es, ts) in users(8, 4), t1 in 0.0..1.2f64, t2 in 0.0..1.2f64) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let refs: Vec<&CodebookEntry> = es.iter().collect();
        let cc = allocate(&refs, &tier_list(&TierTable::default(), &ts), &AllocParams::default()).unwrap();
        let v: Vec<&[f64]> = es.iter().map(|e| e.influence.as_slice()).collect();
        let a = apply_energy_off(&cc, &v, &EEParams { tau_off: lo }).unwrap();
        let b = apply_energy_off(&cc, &v, &EEParams { tau_off: hi }).unwrap();
        for n in 0..cc.len() {
            prop_assert!(a.is_on(n) || !b.is_on(n));
            prop_assert_eq!(a.states()[n], cc.states()[n]);
        }
    }

    #[test]
    fn admission_monotone(
        n in 1usize..40,
        bits in 1u8..=4,
        seed in any::<u64>(),
        tier in 1u8..=5,
        x1 in 0.0..=1.0f64, x2 in 0.0..=1.0f64,
        y1 in 0.01..=1.0f64, y2 in 0.01..=1.0f64,
        sel in 0.01..=1.0f64,
    ) {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let levels = 1usize << bits;
        let states: Vec<u16> = (0..n).map(|_| (next() * levels as f64) as u16 % levels as u16).collect();
        let on: Vec<bool> = (0..n).map(|_| next() < 0.8).collect();
        let cc = CommonConfig::new(levels, states, on);
        let cand = entry((0..n).map(|_| (next() * 2.0 - 1.0) * PI).collect(), (0..n).map(|_| next()).collect());
        let t = TierTable::default().tier(tier).unwrap();
        let policy = |x: f64, y: f64| AdmissionPolicy {
            tolerance: [x; 5],
            select_fraction: [sel; 5],
            accept_fraction: [y; 5],
            ..AdmissionPolicy::default()
        };
        let (xl, xh) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
        let (yl, yh) = if y1 <= y2 { (y1, y2) } else { (y2, y1) };
        let strict = admit(&cc, &cand, t, &policy(xl, yh)).unwrap().admitted;
        prop_assert!(!strict || admit(&cc, &cand, t, &policy(xh, yh)).unwrap().admitted);
        prop_assert!(!strict || admit(&cc, &cand, t, &policy(xl, yl)).unwrap().admitted);
        let d = admit(&cc, &cand, t, &policy(xl, yl)).unwrap();
        prop_assert!(d.selected >= 1 && d.selected <= n);
        prop_assert!(d.mismatches.iter().all(|(_, m)| (0.0..=PI).contains(m)));
    }

    #[test]
    fn quantization_ignores_full_turns(phi in -50.0..50.0f64, bits in 1u8..=4) {
        let levels = 1usize << bits;
        let q = quantize_phase(phi, levels);
        prop_assert!(q < levels);
        prop_assert_eq!(quantize_phase(phi + TAU, levels), q);
        prop_assert_eq!(quantize_phase(phi - TAU, levels), q);
    }

    #[test]
    fn wrap_lands_in_range(phi in -1e3..1e3f64) {
        let w = wrap_phase(phi);
        prop_assert!((-PI..PI).contains(&w));
        prop_assert!(((w - phi) / TAU - ((w - phi) / TAU).round()).abs() < 1e-9);
    }

    #[test]
    fn snr_is_monotone(a in 0.0..1e6f64, b in 0.0..1e6f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(snr_db(Complex64::new(lo, 0.0)) <= snr_db(Complex64::new(0.0, hi)));
    }

    #[test]
    fn correlations_are_bounded(xy in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 2..40)) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        for r in [pearson(&x, &y), spearman(&x, &y)].into_iter().flatten() {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        }
    }
}

fn panel_scene(rows: usize, cols: usize, nb: Neighborhood) -> SceneConfig {
    let mut s = SceneConfig::with_panels(vec![
        PanelSpec::centered(Wall::XMin, rows, cols),
        PanelSpec::centered(Wall::YMax, cols, rows),
    ]);
    s.neighborhood = nb;
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn neighbor_graph_is_symmetric(rows in 1usize..8, cols in 1usize..8, eight in any::<bool>()) {
        let nb = if eight { Neighborhood::Eight } else { Neighborhood::Four };
        let g = build_geometry(&panel_scene(rows, cols, nb)).unwrap();
        for n in 0..g.len() {
            for &m in g.neighbors(n) {
                prop_assert!(g.neighbors(m).contains(&n));
            }
        }
    }

    #[test]
    fn uncoupled_field_is_direct(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
        let mut s = panel_scene(rows, cols, Neighborhood::Four);
        s.coupling_strength = 0.0;
        s.set_uncovered_reflectivity(0.0);
        let g = build_geometry(&s).unwrap();
        let phases: Vec<f64> = (0..g.len()).map(|i| ((seed >> (i % 60)) & 7) as f64 - 3.5).collect();
        let e = solve_incident_field(&s, &g, &RisState::all_on(phases)).unwrap();
        prop_assert_eq!(e.field, direct_field(&s, &g).unwrap());
    }

    #[test]
    fn coupled_solution_satisfies_system(
        rows in 1usize..7, cols in 1usize..7,
        alpha in 0.0..=0.3f64,
        phases_seed in any::<u64>(),
    ) {
        let mut s = panel_scene(rows, cols, Neighborhood::Four);
        s.coupling_strength = alpha;
        let g = build_geometry(&s).unwrap();
        let mut x = phases_seed;
        let phases: Vec<f64> = (0..g.len()).map(|_| {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) * TAU - PI
        }).collect();
        let state = RisState::all_on(phases);
        let solver = IncidentSolver::new(&s, &g).unwrap();
        let sol = solver.solve(&state).unwrap();
        prop_assert!(sol.converged);
        prop_assert!(solver.residual(&state, &sol.field).unwrap() < 1e-8);
    }

    #[test]
    fn total_field_is_linear_and_phase_covariant(phi0 in -PI..PI, rx in 0.2..1.3f64, ry in 0.2..1.3f64, rz in 0.2..1.3f64) {
        let mut s = panel_scene(3, 4, Neighborhood::Four);
        s.coupling_strength = 0.0;
        let g = build_geometry(&s).unwrap();
        let r = Vec3::new(rx, ry, rz);
        let state = RisState::all_on((0..g.len()).map(|i| (i as f64 * 0.7).sin() * 3.0).collect());
        let e = solve_incident_field(&s, &g, &state).unwrap().field;
        let base = total_field(&g, &state, &e, r).unwrap();
        let doubled = FieldVector(e.iter().map(|v| *v * 2.0).collect());
        prop_assert_eq!(total_field(&g, &state, &doubled, r).unwrap(), base * 2.0);

        let rotated = state.rotated(phi0);
        let e_rot = solve_incident_field(&s, &g, &rotated).unwrap().field;
        let shifted = total_field(&g, &rotated, &e_rot, r).unwrap();
        let expect = base * Complex64::from_polar(1.0, phi0);
        prop_assert!((shifted - expect).norm() <= 1e-9 * base.norm().max(1e-300));
        prop_assert!((shifted.norm() - base.norm()).abs() <= 1e-9 * base.norm());
    }

    #[test]
    fn smoothed_influence_in_unit_range(raw in prop::collection::vec(0.0..1e3f64, 2 * 3 * 5)) {
        let g = build_geometry(&panel_scene(3, 5, Neighborhood::Four)).unwrap();
        let v = smooth_influence(&raw, &g);
        prop_assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
        if raw.iter().any(|x| *x > 0.0) {
            prop_assert_eq!(v.iter().copied().fold(0.0, f64::max), 1.0);
        }
    }
}
