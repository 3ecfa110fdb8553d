use manakov_sr::algebra::random_skew;
use manakov_sr::flows::{integrate, integrate_field, monitor, standard_invariants, Integration, Invariant, Scheme};
use manakov_sr::manakov::h_kr;
use manakov_sr::metrics::hamiltonian_sr;
use manakov_sr::{MassSpec, SkewMatrix};

fn strict(n: usize) -> MassSpec {
    MassSpec::sub_riemannian((1..n).map(|i| i as f64).collect()).unwrap()
}

#[test]
fn rk4_conserves_every_invariant() {
    for n in 3..=6 {
        let spec = strict(n);
        let m0 = random_skew(n, 100 + n as u64, 1.0).unwrap();
        let traj = integrate(&m0, &spec, &Integration::new(1e-3, 10_000, Scheme::Rk4), None).unwrap();
        let report = monitor(&traj, &standard_invariants(&spec)).unwrap();
        for d in &report.drifts {
            assert!(d.max_relative_drift <= 1e-8, "n={n} {}: {:e}", d.name, d.max_relative_drift);
        }
    }
}

#[test]
fn rk4_energy_drift_worked_case() {
    let spec = MassSpec::sub_riemannian(vec![1.0, 2.0]).unwrap();
    let m0 = SkewMatrix::from_upper(3, &[0.8, -0.5, 0.3]).unwrap();
    let traj = integrate(&m0, &spec, &Integration::new(1e-3, 10_000, Scheme::Rk4), None).unwrap();
    let h = Invariant::new("H", |m| hamiltonian_sr(m, &spec).unwrap());
    assert!(monitor(&traj, &[h]).unwrap().worst() <= 1e-9);
}

#[test]
fn midpoint_conserves_the_quadratic_casimir() {
    for n in 3..=6 {
        let spec = strict(n);
        let m0 = random_skew(n, 7, 1.0).unwrap();
        let traj = integrate(&m0, &spec, &Integration::new(1e-3, 10_000, Scheme::Midpoint), None).unwrap();
        let c2 = Invariant::new("C2", |m| m.trace_power(2));
        let drift = monitor(&traj, &[c2]).unwrap().worst();
        assert!(drift <= 1e-12, "n={n}: {drift:e}");
    }
}

#[test]
fn flipped_t_component_breaks_conservation() {
    let spec = strict(4);
    let m0 = random_skew(4, 3, 1.0).unwrap();
    let cfg = Integration::new(1e-3, 10_000, Scheme::Rk4);
    let wrong = |m: &SkewMatrix| {
        let v = manakov_sr::flows::vf_sr(m, &spec).unwrap();
        let sp = manakov_sr::algebra::split(&v);
        &sp.p_part - &sp.t_part
    };
    let traj = integrate_field(&m0, &cfg, wrong).unwrap();
    let h32 = Invariant::new("h_3_2", |m| h_kr(m, &spec, 3, 2).unwrap());
    assert!(monitor(&traj, &[h32]).unwrap().worst() > 1e-6);
}

#[test]
fn rk4_richardson_order() {
    let spec = strict(4);
    let m0 = random_skew(4, 21, 1.0).unwrap();
    let drift = |dt: f64| {
        let steps = (4.0 / dt).round() as usize;
        let traj = integrate(&m0, &spec, &Integration::new(dt, steps, Scheme::Rk4), None).unwrap();
        let h32 = Invariant::new("h_3_2", |m| h_kr(m, &spec, 3, 2).unwrap());
        monitor(&traj, &[h32]).unwrap().worst()
    };
    let ratio = drift(0.04) / drift(0.02);
    assert!((10.0..24.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn riemannian_flow_conserves_its_integrals() {
    let spec = MassSpec::riemannian(vec![0.4, 1.0, 1.7, 2.9]).unwrap();
    let m0 = random_skew(4, 5, 1.0).unwrap();
    let traj = integrate(&m0, &spec, &Integration::new(1e-3, 5_000, Scheme::Rk4), None).unwrap();
    let f32 = Invariant::new("f_3_2", |m| manakov_sr::manakov::riemannian_f(m, &spec, 3).unwrap()[&(3, 2)]);
    let mut invs = standard_invariants(&spec);
    invs.push(f32);
    assert!(monitor(&traj, &invs).unwrap().worst() <= 1e-9);
}
