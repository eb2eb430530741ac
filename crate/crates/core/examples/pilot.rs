// Scratch pilot runs used while calibrating the acceptance fixtures.
use assemblies::additive::{
    exceedance_scan, feller::gamma_threshold_sequence, lil_experiment, AdditiveFunction,
    LilOptions, ProcessForm,
};
use assemblies::backend::{rat, rat_int};
use assemblies::dist::tv_decay_scan;
use assemblies::model::AssemblySpec;
use assemblies::series::coefficient_ratio_band;
use assemblies::verify::{decay_exponents, series_ratio_check};
use assemblies::Rat;
use num_traits::One;
use std::time::Instant;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".into());

    if which == "band" || which == "all" {
        println!("== coefficient ratio band, permutations ==");
        let spec = AssemblySpec::permutations(4096);
        let rates = spec.derive_rates(4096).unwrap();
        let ns: Vec<usize> = (4..=12).map(|k| 1usize << k).collect();
        let t0 = Instant::now();
        let rows = coefficient_ratio_band(&rates, &ns).unwrap();
        for row in rows {
            println!(
                "n={:5} ratio={:.6} normalized={:.6}",
                row.n, row.ratio, row.normalized
            );
        }
        println!("elapsed {:?}", t0.elapsed());
    }

    if which == "scan" || which == "all" {
        println!("== tv decay scan ==");
        for theta in [rat(1, 2), rat_int(1), rat_int(2)] {
            let tf = format!("{theta}");
            let spec = AssemblySpec::ewens(theta, 600).unwrap();
            let exps = decay_exponents(
                spec.ewens_theta().map(|t| assemblies::backend::to_f64(&t)).unwrap(),
            )
            .unwrap();
            println!("theta={tf} c={:.6} c0={:.6} c1={:.6}", exps.c, exps.c0, exps.c1);
            for n in [128usize, 256, 512] {
                let t0 = Instant::now();
                let r_list: Vec<usize> = (1..)
                    .map(|k| 1usize << k)
                    .take_while(|&r| 4 * r <= n)
                    .collect();
                let rep = tv_decay_scan(&spec, n, &r_list, exps_theta(&tf)).unwrap();
                print!("  n={n:3} C_fit={:.5} slope={:.3} [", rep.c_fit, rep.slope);
                for row in &rep.rows {
                    print!(" {:.3e}", row.tv);
                }
                println!(" ] {:?}", t0.elapsed());
            }
        }
    }

    if which == "lil" || which == "all" {
        println!("== lil medians ==");
        let spec = AssemblySpec::ewens(rat_int(1), 1 << 20).unwrap();
        let h = AdditiveFunction::component_count();
        let opts = LilOptions::default();
        for n in [1000usize, 10_000, 100_000] {
            let t0 = Instant::now();
            let s = lil_experiment(&spec, &h, n, n / 2, 200, 20260811, opts).unwrap();
            println!(
                "n={:6} median_max_dist={:.4} endpoint_outside={:.4} pair_outside={:.4} growth_sup={:.4} ({:?})",
                n, s.median_max_dist, s.endpoint_outside_frac, s.pair_outside_frac,
                s.growth_condition_sup, t0.elapsed()
            );
        }
    }

    if which == "lilpilot" {
        // endpoint pilot at 1e6 for the fixture
        let spec = AssemblySpec::ewens(rat_int(1), 1 << 21).unwrap();
        let h = AdditiveFunction::component_count();
        let opts = LilOptions::default();
        let t0 = Instant::now();
        let s = lil_experiment(&spec, &h, 1_000_000, 500_000, 200, 20260811, opts).unwrap();
        println!(
            "n=1e6 median={:.4} endpoint_outside={:.4} pair_outside={:.4} ({:?})",
            s.median_max_dist, s.endpoint_outside_frac, s.pair_outside_frac, t0.elapsed()
        );
    }

    if which == "exceed" || which == "all" {
        println!("== exceedance ordering ==");
        let spec = AssemblySpec::ewens(rat_int(1), 1 << 20).unwrap();
        let h = AdditiveFunction::component_count();
        let n = 100_000;
        let rates = spec.derive_rates(n).unwrap();
        let t0 = Instant::now();
        for eps in [0.5f64, -0.5] {
            let psi = gamma_threshold_sequence(&h, &rates, 2, eps, n).unwrap();
            let est =
                exceedance_scan(&spec, &h, &psi, n, n / 2, 400, 4711, ProcessForm::Indicator)
                    .unwrap();
            println!(
                "eps={eps:+.1} estimate={:.4} se={:.4} count={}",
                est.estimate, est.std_error, est.exceed_count
            );
        }
        println!("elapsed {:?}", t0.elapsed());
    }

    if which == "prop1" || which == "all" {
        println!("== series ratio fixture ==");
        let d: Vec<Rat> = vec![Rat::one(); 100];
        let rep = series_ratio_check(&d, 100, 5, 100, 0.0, 0.25).unwrap();
        println!(
            "d=1,n=100,r=5,m=100,eta=0,delta=1/4: ratio-1 = {:.12e}, bound = {:.6}, c = {:.6}",
            rep.ratio_minus_one, rep.bound, rep.c
        );
        // monotone trend grid
        for r in [0usize, 2, 5, 10, 20] {
            let rep = series_ratio_check(&d, 100, r, 100, 0.0, 0.25).unwrap();
            println!("  r={r:2} |ratio-1|={:.6e}", rep.ratio_minus_one.abs());
        }
        for (eta, m) in [(0.0, 100usize), (0.05, 96), (0.2, 85)] {
            let rep = series_ratio_check(&d, 100, 5, m, eta, 0.25).unwrap();
            println!("  eta={eta:.2} m={m} |ratio-1|={:.6e}", rep.ratio_minus_one.abs());
        }
    }
}

fn exps_theta(s: &str) -> f64 {
    match s {
        "1/2" => 0.5,
        "1" => 1.0,
        "2" => 2.0,
        _ => panic!(),
    }
}
