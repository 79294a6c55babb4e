use proptest::prelude::*;

use strandsim::diagnostics::{conservation_error, global_ink_volume, strand_cross_section};
use strandsim::grid::{build_grid, FieldSet, Grid};
use strandsim::levelset::{advance_levelset, equilibrium_profile, stable_dt, LevelSetParams, TransportBoundary};
use strandsim::scenario::{build_benchmark, BenchmarkCase, BenchmarkKind, InterfaceSettings, Thickness};
use strandsim::sweep_cli::{run_case, RunSettings};

fn periodic_box(n: usize) -> Grid {
    use strandsim::grid::{BoundaryKind, Side};
    build_grid([1.0, 1.0], 1.0 / n as f64)
        .unwrap()
        .with_tags([
            (Side::Left, BoundaryKind::Periodic),
            (Side::Right, BoundaryKind::Periodic),
            (Side::Bottom, BoundaryKind::Periodic),
            (Side::Top, BoundaryKind::Periodic),
        ])
        .unwrap()
}

fn uniform_flow(grid: &Grid, velocity: [f64; 2]) -> FieldSet {
    let mut f = FieldSet::new(grid);
    f.u.iter_mut().for_each(|u| *u = velocity[0]);
    f.v.iter_mut().for_each(|v| *v = velocity[1]);
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn levelset_stays_bounded_and_conserves_mass(
        cx in 0.3..0.7f64,
        cy in 0.3..0.7f64,
        r in 0.1..0.25f64,
        angle in 0.0..std::f64::consts::TAU,
        speed in 0.0..1.0f64,
        eps_cells in 0.5..2.5f64,
        gamma_margin in 1.0..3.0f64,
    ) {
        let grid = periodic_box(32);
        let velocity = [speed * angle.cos(), speed * angle.sin()];
        let params = LevelSetParams::new(eps_cells * grid.dx, (gamma_margin * speed).max(0.05)).unwrap();
        prop_assert!(params.meets_bound_criterion(&grid, speed));
        let mut fields = uniform_flow(&grid, velocity);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let [x, y] = grid.cell_center(i, j);
                fields.phi[grid.idx(i, j)] = equilibrium_profile((x - cx).hypot(y - cy) - r, params.epsilon);
            }
        }
        let total = |f: &FieldSet| f.phi.iter().sum::<f64>();
        let before = total(&fields);
        let dt = stable_dt(&fields, &params, &grid, 0.5, 0.5).unwrap().dt;
        for _ in 0..60 {
            let s = advance_levelset(&grid, &mut fields, &params, TransportBoundary::default(), dt).unwrap();
            prop_assert!(s.min >= -1e-6 && s.max <= 1.0 + 1e-6, "phi range [{}, {}]", s.min, s.max);
        }
        let drift = (total(&fields) - before).abs() / before;
        prop_assert!(drift < 1e-12, "drift {drift:e}");
    }

    #[test]
    fn conservation_error_is_relative_percent(a_f in 1e-9..1e-2f64, ratio in 0.0..3.0f64, scale in 1e-3..1e3f64) {
        let a_s = ratio * a_f;
        let e = conservation_error(a_s, a_f);
        prop_assert!((e - (ratio - 1.0).abs() * 100.0).abs() < 1e-9 * (1.0 + e));
        prop_assert!((conservation_error(scale * a_s, scale * a_f) - e).abs() < 1e-9 * (1.0 + e));
        prop_assert!(conservation_error(a_f, a_f) == 0.0);
    }

    #[test]
    fn strand_section_is_translation_invariant(
        thickness_cells in 3.0..20.0f64,
        start_cells in 5usize..20,
        shift in 0usize..10,
        station_frac in 0.5..0.9f64,
    ) {
        let (nx, ny, h) = (80usize, 40usize, 1e-5);
        let grid = Grid::new(nx, ny, h, h).unwrap();
        let eps = 1.5 * h;
        let thickness = thickness_cells * h;
        // A strand along the bed whose front sits at `start`.
        let strand = |start: f64| {
            let mut phi = vec![1.0; grid.n_cells()];
            for j in 0..ny {
                for i in 0..nx {
                    let [x, y] = grid.cell_center(i, j);
                    let d = (y - thickness).max(start - x);
                    phi[grid.idx(i, j)] = equilibrium_profile(d, eps);
                }
            }
            phi
        };
        let start = start_cells as f64 * h;
        let station = station_frac * nx as f64 * h;
        let a = strand(start);
        let b = strand(start + shift as f64 * h);
        let here = strand_cross_section(&a, &grid, station).unwrap();
        let moved = strand_cross_section(&b, &grid, station + shift as f64 * h).unwrap();
        prop_assert!((here.size - moved.size).abs() < 1e-12 * thickness);
        // Far behind the front the measured thickness is the profile's.
        prop_assert!((here.size - thickness).abs() < 0.05 * h, "{} vs {}", here.size, thickness);
        let elsewhere = strand_cross_section(&a, &grid, 0.95 * nx as f64 * h).unwrap();
        prop_assert!((elsewhere.size - here.size).abs() < 1e-9 * thickness);
    }

    #[test]
    fn ink_volume_complements_air(n in 4usize..24, level in 0.0..1.0f64) {
        let grid = Grid::new(n, n, 0.1, 0.2).unwrap();
        let phi = vec![level; grid.n_cells()];
        let v = global_ink_volume(&phi, &grid);
        prop_assert!((v - (1.0 - level) * grid.n_cells() as f64 * grid.cell_area()).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn benchmark_runs_are_deterministic(gamma in 0.6..2.0f64, factor in 0.5..1.2f64) {
        let case = build_benchmark(
            &BenchmarkCase {
                kind: BenchmarkKind::TranslatingBlob,
                interface: Some(InterfaceSettings { thickness: Thickness::Factor(factor), gamma }),
                duration: Some(0.05),
            },
            1.0 / 24.0,
        )
        .unwrap();
        let a = run_case(&case, &RunSettings::default(), None).unwrap();
        let b = run_case(&case, &RunSettings::default(), None).unwrap();
        prop_assert_eq!(&a.fields.phi, &b.fields.phi);
        prop_assert_eq!(&a.records, &b.records);
    }
}
