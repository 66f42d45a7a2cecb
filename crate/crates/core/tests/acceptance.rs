//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned.
//!
//! Runtime limits are part of each criterion and are checked too.

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;
use std::time::Instant;

use finsler_core::comparison::{self, BoundInputs, Provenance, Tagged};
use finsler_core::duality;
use finsler_core::harness::{self, Scenario};
use finsler_core::invariants;
use finsler_core::measures::{self, MeasureSpec};
use finsler_core::metric::{Chart, ChartPoint, Family, MetricModel, OneForm, RiemannianField, Tangent};
use finsler_core::spectral::{self, EigenOptions, Mask, Mesh, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn torus() -> Chart {
    Chart::torus(TAU, TAU).unwrap()
}

fn circle() -> Chart {
    Chart::circle(TAU).unwrap()
}

fn randers_torus(b: f64) -> MetricModel {
    MetricModel::randers(torus(), [[1.0, 0.0], [0.0, 1.0]], [b, 0.0]).unwrap()
}

fn randers_circle(b: f64) -> MetricModel {
    MetricModel::randers(circle(), [[1.0, 0.0], [0.0, 0.0]], [b, 0.0]).unwrap()
}

fn wave_torus() -> MetricModel {
    MetricModel::new(
        torus(),
        Family::Randers {
            alpha: RiemannianField::Constant([[1.2, 0.3], [0.3, 0.9]]),
            beta: OneForm::Wave { b: 0.4, wavevector: [1.0, 2.0], phase: 0.3 },
        },
    )
    .unwrap()
}

fn minkowski_torus() -> MetricModel {
    MetricModel::new(torus(), Family::Minkowski { a: [[1.0, 0.2], [0.2, 1.5]], quartic: 0.5, drift: [0.1, 0.05] })
        .unwrap()
}

fn ht() -> MeasureSpec {
    MeasureSpec::holmes_thompson()
}

fn lambda1(m: &MetricModel, mesh: &Mesh, q: &MeasureSpec) -> (f64, bool) {
    let sigma = measures::density_field(m, mesh, q).unwrap();
    let r = spectral::eigen_closed(mesh, m, &sigma, &EigenOptions::default()).unwrap();
    (r.lambda1, r.converged)
}

fn c01_randers_closed_forms() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mesh = Mesh::for_chart(&torus(), 16).unwrap();
    for b in [0.1, 0.3, 0.5] {
        let start = Instant::now();
        let r = invariants::invariants(&randers_torus(b), &mesh).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let el = rel(r.lambda_f, (1.0 + b) / (1.0 - b));
        let eu = rel(r.uniformity, ((1.0 + b) / (1.0 - b)).powi(2));
        ok &= el < 1e-3 && eu < 5e-3 && secs < 10.0;
        lines.push(format!("b={b}: rel err lambda_F {el:.1e} (<1e-3), Lambda_F {eu:.1e} (<5e-3), {secs:.1}s"));
    }
    check(ok, lines.join("; "))
}

fn c02_duality_round_trips() -> Outcome {
    let families: Vec<(&str, MetricModel)> = vec![
        ("riemannian", MetricModel::riemannian(torus(), [[2.0, 0.5], [0.5, 1.0]]).unwrap()),
        ("randers", randers_torus(0.5)),
        ("randers-wave", wave_torus()),
        ("minkowski", minkowski_torus()),
        (
            "conformal-neck",
            MetricModel::new(torus(), Family::ConformalNeck { a: [[1.0, 0.0], [0.0, 1.0]], width: 0.3, warped: false })
                .unwrap(),
        ),
        ("randers-circle", randers_circle(0.7)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for (name, m) in &families {
        let mut fam_worst = 0.0f64;
        for _ in 0..1000 {
            let x = [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
            let p = ChartPoint::new(if m.dim() == 1 { [x[0], 0.0] } else { x });
            let y = if m.dim() == 1 {
                [rng.random_range(-3.0..3.0), 0.0]
            } else {
                [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]
            };
            let fy = m.eval(&p, y);
            let eta = duality::legendre(m, &Tangent::new(p, y)).unwrap();
            let e1 = rel(duality::dual_norm(m, &eta), fy);
            let back = duality::legendre_inverse(m, &eta).unwrap();
            let round = duality::legendre(m, &Tangent::new(p, back)).unwrap().eta;
            let scale = eta.eta[0].hypot(eta.eta[1]);
            let e2 = (round[0] - eta.eta[0]).hypot(round[1] - eta.eta[1]) / scale;
            fam_worst = fam_worst.max(e1).max(e2);
        }
        worst = worst.max(fam_worst);
        lines.push(format!("{name} {fam_worst:.1e}"));
    }
    check(worst < 1e-7, format!("max rel err {worst:.2e} (<1e-7): {}", lines.join(", ")))
}

fn c03_measures() -> Outcome {
    let a = [[2.0, 0.5], [0.5, 1.0]];
    let target = (2.0f64 * 1.0 - 0.25).sqrt();
    let p = ChartPoint::new([0.4, 1.1]);
    let riem = MetricModel::riemannian(torus(), a).unwrap();
    let bh = measures::density(&riem, &p, &MeasureSpec::busemann_hausdorff()).unwrap();
    let ht_r = measures::density(&riem, &p, &ht()).unwrap();
    let randers = MetricModel::randers(torus(), a, [0.3, -0.2]).unwrap();
    let ht_f = measures::density(&randers, &p, &ht()).unwrap();
    let (e1, e2, e3) = (rel(bh, target), rel(ht_r, target), rel(ht_f, target));
    check(
        e1 < 5e-3 && e2 < 5e-3 && e3 < 5e-3,
        format!("riemannian BH {e1:.1e}, HT {e2:.1e}; randers HT {e3:.1e} (all <5e-3)"),
    )
}

fn c04_berwald_s_curvature() -> Outcome {
    let m = minkowski_torus();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = [0.0f64; 2];
    for _ in 0..200 {
        let x = [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
        let th = rng.random_range(0.0..TAU);
        let t = Tangent::new(ChartPoint::new(x), [th.cos(), th.sin()]);
        for (k, q) in [MeasureSpec::busemann_hausdorff(), ht()].iter().enumerate() {
            worst[k] = worst[k].max(measures::s_curvature(&m, &t, q).unwrap().abs());
        }
    }
    check(worst[0] < 1e-4 && worst[1] < 1e-4, format!("max |S| BH {:.1e}, HT {:.1e} (<1e-4)", worst[0], worst[1]))
}

fn c05_eigensolver_ground_truth() -> Outcome {
    let euclid_circle = MetricModel::riemannian(circle(), [[1.0, 0.0], [0.0, 0.0]]).unwrap();
    let (l_circle, c1) = lambda1(&euclid_circle, &Mesh::for_chart(&circle(), 256).unwrap(), &ht());
    let flat = MetricModel::euclidean(torus()).unwrap();
    let (l_torus, c2) = lambda1(&flat, &Mesh::for_chart(&torus(), 64).unwrap(), &ht());
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| (lambda1(&euclid_circle, &Mesh::for_chart(&circle(), n).unwrap(), &ht()).0 - 1.0).abs())
        .collect();
    // Least-squares slope of log error against log h over the three levels.
    let xs: Vec<f64> = [32.0f64, 64.0, 128.0].iter().map(|n| (TAU / n).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    check(
        (l_circle - 1.0).abs() <= 0.02 && (l_torus - 1.0).abs() <= 0.02 && slope >= 1.5 && c1 && c2,
        format!("circle N=256 {l_circle:.6}, torus 64^2 {l_torus:.6} (1 +- 2%); refinement exponent {slope:.3} (>=1.5)"),
    )
}

fn c06_randers_sandwich() -> Outcome {
    let b = 0.3;
    let mesh = Mesh::for_chart(&torus(), 64).unwrap();
    let (lf, c1) = lambda1(&randers_torus(b), &mesh, &ht());
    let (la, c2) = lambda1(&MetricModel::euclidean(torus()).unwrap(), &mesh, &ht());
    let lo = la / ((1.0 + b) * (1.0 + b)) * (1.0 - 0.02);
    let hi = la / ((1.0 - b) * (1.0 - b)) * (1.0 + 0.02);
    check(lo <= lf && lf <= hi && c1 && c2, format!("{lo:.5} <= lambda1(F) = {lf:.5} <= {hi:.5} (lambda1(alpha) = {la:.5})"))
}

fn c07_cheeger_exact_1d() -> Outcome {
    let metrics = [
        ("riemannian", MetricModel::riemannian(circle(), [[1.0, 0.0], [0.0, 0.0]]).unwrap()),
        ("randers b=0.3", randers_circle(0.3)),
        ("randers b=0.5", randers_circle(0.5)),
    ];
    let mesh = Mesh::for_chart(&circle(), 256).unwrap();
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, m) in &metrics {
        let sigma = measures::density_field(m, &mesh, &ht()).unwrap();
        let r = spectral::eigen_closed(&mesh, m, &sigma, &EigenOptions::default()).unwrap();
        let h = spectral::cheeger_1d_exact(m, &mesh, &sigma).unwrap();
        let lf = invariants::reversibility(m, &mesh).unwrap();
        let rec = harness::verify::cheeger_eigen_lower(
            Some(Tagged::estimate(r.lambda1)),
            Some(Tagged::exact(h)),
            Some(Tagged::new(lf, Provenance::LowerBound)),
            0.02,
        )
        .unwrap();
        ok &= rec.satisfied && r.converged;
        lines.push(format!("{name}: {:.5} <= {:.5}", rec.lhs * 0.98, r.lambda1));
    }
    check(ok, lines.join("; "))
}

fn c08_scaling() -> Outcome {
    let c = 4.0;
    let mesh = Mesh::for_chart(&circle(), 256).unwrap();
    let m = randers_circle(0.3);
    let s = m.rescaled(c).unwrap();
    let q = ht();
    let (sig, sig_s) = (measures::density_field(&m, &mesh, &q).unwrap(), measures::density_field(&s, &mesh, &q).unwrap());
    let opts = EigenOptions::default();
    let l = spectral::eigen_closed(&mesh, &m, &sig, &opts).unwrap().lambda1;
    let ls = spectral::eigen_closed(&mesh, &s, &sig_s, &opts).unwrap().lambda1;
    let h = spectral::cheeger_1d_exact(&m, &mesh, &sig).unwrap();
    let hs = spectral::cheeger_1d_exact(&s, &mesh, &sig_s).unwrap();
    let el = rel(ls, l / c);
    let eh = rel(hs, h / c.sqrt());
    check(el <= 1e-6 && eh <= 1e-9, format!("lambda1 rel err {el:.1e} (<=1e-6), h rel err {eh:.1e} (<=1e-9)"))
}

fn c09_yau_flat_torus() -> Outcome {
    let m = MetricModel::euclidean(torus()).unwrap();
    let mesh = Mesh::for_chart(&torus(), 64).unwrap();
    let sigma = measures::density_field(&m, &mesh, &ht()).unwrap();
    let l = spectral::eigen_closed(&mesh, &m, &sigma, &EigenOptions::default()).unwrap().lambda1;
    let diam = spectral::diameter(&m, &mesh, spectral::MIN_SOURCES).unwrap().value;
    let vol = spectral::total_volume(&mesh, &sigma).unwrap();
    let inputs = BoundInputs {
        n: 2,
        k: Tagged::exact(0.0),
        uniformity: Tagged::exact(1.0),
        reversibility: Tagged::exact(1.0),
        volume: Tagged::estimate(vol),
        diameter: Tagged::estimate(diam),
    };
    let yau = comparison::yau_eigen_lower(&inputs).unwrap();
    check(yau <= l, format!("bound {yau:.6} <= lambda1 {l:.6} (diam {diam:.5}, mu {vol:.5})"))
}

fn c10_reverse_identities() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mesh = Mesh::for_chart(&torus(), 48).unwrap();
    for (name, m) in [("randers-wave", wave_torus()), ("minkowski", minkowski_torus())] {
        let r = m.reverse();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut spray_err = 0.0f64;
        for _ in 0..50 {
            let x = ChartPoint::new([rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)]);
            let th = rng.random_range(0.0..TAU);
            let y = [th.cos(), th.sin()];
            let g = m.spray(&Tangent::new(x, [-y[0], -y[1]])).unwrap();
            let gr = r.spray(&Tangent::new(x, y)).unwrap();
            spray_err = spray_err.max((g[0] - gr[0]).hypot(g[1] - gr[1]) / (1.0 + g[0].hypot(g[1])));
        }
        let mut mu_err = 0.0f64;
        for q in [MeasureSpec::busemann_hausdorff(), ht()] {
            let a = spectral::total_volume(&mesh, &measures::density_field(&m, &mesh, &q).unwrap()).unwrap();
            let b = spectral::total_volume(&mesh, &measures::density_field(&r, &mesh, &q).unwrap()).unwrap();
            mu_err = mu_err.max(rel(b, a));
        }
        let sigma = measures::density_field(&m, &mesh, &ht()).unwrap();
        let sigma_r = measures::density_field(&r, &mesh, &ht()).unwrap();
        let f = ScalarField::from_fn(mesh, |x| x[0].sin() + 0.5 * (2.0 * x[1]).cos() + 0.3 * (x[0] + x[1]).sin()).unwrap();
        let mut area_err = 0.0f64;
        for t in [-0.7, -0.2, 0.1, 0.6] {
            let c = spectral::cut_areas(&f, t, &m, &sigma).unwrap();
            let cr = spectral::cut_areas(&f, t, &r, &sigma_r).unwrap();
            area_err = area_err.max(rel(cr.area_forward, c.area_backward)).max(rel(cr.area_backward, c.area_forward));
        }
        ok &= spray_err <= 1e-6 && mu_err <= 1e-9 && area_err <= 1e-9;
        lines.push(format!("{name}: spray {spray_err:.1e} (<=1e-6), mu {mu_err:.1e}, areas {area_err:.1e} (<=1e-9)"));
    }
    check(ok, lines.join("; "))
}

fn c11_coarea_layer_cake() -> Outcome {
    let m = wave_torus();
    let mut gaps = Vec::new();
    for n in [64, 128] {
        let mesh = Mesh::for_chart(&torus(), n).unwrap();
        let sigma = measures::density_field(&m, &mesh, &ht()).unwrap();
        let phi = ScalarField::from_fn(mesh, |x| x[0].sin() + 0.5 * (2.0 * x[1]).cos() + 0.3 * (x[0] + x[1]).sin()).unwrap();
        let f = ScalarField::from_fn(mesh, |x| 1.5 + x[0].cos() * x[1].sin()).unwrap();
        let co = spectral::coarea_check(&f, &phi, &m, &sigma, spectral::DEFAULT_SLABS).unwrap();
        let lc = spectral::layer_cake_check(&f, &sigma, 1024).unwrap();
        gaps.push((co.gap, lc.gap));
    }
    let (base, fine) = (gaps[0], gaps[1]);
    check(
        base.0 < 0.02 && base.1 < 0.02 && fine.0 < 0.01 && fine.1 < 0.01,
        format!(
            "co-area {:.1e} / {:.1e}, layer-cake {:.1e} / {:.1e} (base <2e-2, 2x <1e-2)",
            base.0, fine.0, base.1, fine.1
        ),
    )
}

fn c12_minimax() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mesh = Mesh::for_chart(&torus(), 64).unwrap();
    let opts = EigenOptions::default();
    for (name, m) in [("flat", MetricModel::euclidean(torus()).unwrap()), ("randers b=0.3", randers_torus(0.3))] {
        let sigma = measures::density_field(&m, &mesh, &ht()).unwrap();
        let l = spectral::eigen_closed(&mesh, &m, &sigma, &opts).unwrap().lambda1;
        let eps = 1e-9;
        let d1 = Mask::from_fn(mesh, |x| x[0] <= PI + eps).unwrap();
        let d2 = Mask::from_fn(mesh, |x| x[0] >= PI - eps || x[0] <= eps).unwrap();
        let l1 = spectral::eigen_dirichlet(&mesh, &m, &sigma, &d1, &opts).unwrap().lambda1;
        let l2 = spectral::eigen_dirichlet(&mesh, &m, &sigma, &d2, &opts).unwrap().lambda1;
        let lf = invariants::reversibility(&m, &mesh).unwrap();
        let rhs = lf * lf * l1.max(l2) * 1.05;
        ok &= l <= rhs;
        lines.push(format!("{name}: {l:.5} <= {rhs:.5}"));
    }
    check(ok, lines.join("; "))
}

#[derive(Debug, Serialize, Deserialize)]
struct BandMember {
    width: f64,
    lambda1: f64,
    h_ub: f64,
    delta: f64,
    ratio: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct BandFixture {
    resolution: usize,
    members: Vec<BandMember>,
    band_factor: f64,
}

fn neck_scenario(width: f64, resolution: usize) -> Scenario {
    Scenario::from_toml_str(&format!(
        r#"
name = "neck"
tasks = ["bounds"]
manifold.periods = ["2pi", "2pi"]
manifold.resolution = {resolution}
metric.family = "conformal-neck"
metric.width = {width}
metric.profile = "warped"
"#
    ))
    .unwrap()
}

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/buser_band.json")
}

fn c13_buser_band() -> Outcome {
    let resolution = 64;
    let mut members = Vec::new();
    for width in [0.2, 0.4, 0.7] {
        let out = harness::run_scenario(&neck_scenario(width, resolution)).map_err(|e| e.to_string())?;
        let q = &out.report.quantities;
        members.push(BandMember {
            width,
            lambda1: q.lambda1.unwrap().value,
            h_ub: q.h_ub.unwrap().value,
            delta: q.delta.unwrap().value,
            ratio: q.buser_ratio.unwrap(),
        });
    }
    let ratios: Vec<f64> = members.iter().map(|m| m.ratio).collect();
    let band = ratios.iter().copied().fold(f64::MIN, f64::max) / ratios.iter().copied().fold(f64::MAX, f64::min);
    let mono_l = members.windows(2).all(|w| w[0].lambda1 < w[1].lambda1);
    let mono_h = members.windows(2).all(|w| w[0].h_ub < w[1].h_ub);
    let current = BandFixture { resolution, members, band_factor: band };
    let path = fixture_path();
    if std::env::var_os("FINSLER_WRITE_FIXTURES").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, serde_json::to_string_pretty(&current).unwrap()).unwrap();
    }
    let regression = match std::fs::read_to_string(&path) {
        Ok(text) => {
            let stored: BandFixture = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            let same = stored.members.len() == current.members.len()
                && stored.members.iter().zip(&current.members).all(|(a, b)| {
                    a.width == b.width && rel(b.lambda1, a.lambda1) < 1e-6 && rel(b.h_ub, a.h_ub) < 1e-6
                })
                && rel(current.band_factor, stored.band_factor) < 1e-6;
            if same { "matches fixture".to_string() } else { "DIFFERS from fixture".to_string() }
        }
        Err(_) => "fixture missing".to_string(),
    };
    let detail = format!(
        "widths {:?}: lambda1 {:?}, h_ub {:?}, ratio band {band:.3} (<=10); monotone lambda1 {mono_l}, h_ub {mono_h}; {regression}",
        current.members.iter().map(|m| m.width).collect::<Vec<_>>(),
        current.members.iter().map(|m| format!("{:.4}", m.lambda1)).collect::<Vec<_>>(),
        current.members.iter().map(|m| format!("{:.4}", m.h_ub)).collect::<Vec<_>>(),
    );
    check(band <= 10.0 && mono_l && mono_h && regression == "matches fixture", detail)
}

type Criterion = (&'static str, f64, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 13] = [
        ("01 randers closed forms", 30.0, c01_randers_closed_forms),
        ("02 duality round trips", 5.0, c02_duality_round_trips),
        ("03 measures", 30.0, c03_measures),
        ("04 berwald s-curvature", 60.0, c04_berwald_s_curvature),
        ("05 eigensolver ground truth", 120.0, c05_eigensolver_ground_truth),
        ("06 randers eigenvalue sandwich", 180.0, c06_randers_sandwich),
        ("07 cheeger lower bound, exact 1d", 120.0, c07_cheeger_exact_1d),
        ("08 scaling", 60.0, c08_scaling),
        ("09 yau lower bound", 60.0, c09_yau_flat_torus),
        ("10 reverse-metric identities", 60.0, c10_reverse_identities),
        ("11 co-area and layer-cake", 120.0, c11_coarea_layer_cake),
        ("12 minimax", 180.0, c12_minimax),
        ("13 buser-form band", 600.0, c13_buser_band),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, limit, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs <= limit;
        let (pass, detail) = match result {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!("{} criterion {name}: {detail} [{secs:.1}s, limit {limit:.0}s]", if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
