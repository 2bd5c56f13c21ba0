use dp2ff::fpdynamics::{dp2_fp_orbit_from, dp2_period, first_finite_state};
use dp2ff::maps::dp2_scalar_residual;
use dp2ff::numbers::{rat, ratio};
use dp2ff::tau::{rational_u, reduced_solution, TauParams};
use dp2ff::{Error, Prime};

#[test]
fn reduction_commutes_with_evolution() {
    let t = TauParams::new(3, rat(1)).unwrap();
    for q in [3, 5, 7, 11] {
        let p = Prime::new(q).unwrap();
        let len = 4 * q as usize;
        let seq = reduced_solution(&t, p, len).unwrap();
        let params = t.dp2_params(p).unwrap();
        let s = first_finite_state(&seq).unwrap();
        let start = s.n as usize;
        let evolved = dp2_fp_orbit_from(s, len - start, &params).unwrap();
        assert_eq!(evolved[..], seq[start..], "p {q}");
        assert_eq!(dp2_period(s, &params).unwrap(), q as i64);
    }
}

#[test]
fn solution_over_q_at_non_integral_lambda() {
    for big_n in 1..=4 {
        let t = TauParams::new(big_n, ratio(1, 3)).unwrap();
        let prm = t.residual_params();
        let u: Vec<_> = (-21..=21)
            .map(|n| match rational_u(n, &t) {
                Err(Error::ZeroTauDenominator(_)) => None,
                r => Some(r.unwrap()),
            })
            .collect();
        for i in 1..u.len() - 1 {
            let (Some(a), Some(b), Some(c)) = (&u[i - 1], &u[i], &u[i + 1]) else { continue };
            if *b == rat(1) || *b == rat(-1) {
                continue;
            }
            let n = i as i64 - 21;
            assert_eq!(dp2_scalar_residual(a, b, c, n, &prm).unwrap(), rat(0), "N {big_n} n {n}");
        }
    }
}

#[test]
fn lambda_must_be_a_unit_for_reduction() {
    let t = TauParams::new(2, ratio(1, 3)).unwrap();
    assert!(reduced_solution(&t, Prime::new(3).unwrap(), 4).is_err());
    assert!(reduced_solution(&t, Prime::new(5).unwrap(), 4).is_ok());
}
