//! Acceptance criteria, one PASS/FAIL line each. The lines go straight to the
//! stdout handle so they show up even when the harness captures output.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use phq_core::fock_space::{build_ladder, build_number, build_qp, q_moment, FockOperator};
use phq_core::hermite_quad::Grid1D;
use phq_core::moment_engine::{
    mixture_moment_operator, moment_operator, moment_polynomial, nseries_converges, q2k_polynomial_check,
    s_coefficients,
};
use phq_core::phase_density::{density, x_margin, y_margin, Axis};
use phq_core::quantizer::{quantize_complex, quantize_sum, RealPolynomial};
use phq_core::verify_oracle::{default_density_grid, moment_of, oracle_margin, random_states, DEFAULT_SEED};
use phq_core::weights::WeightSequence;

const LEVELS: [usize; 6] = [0, 1, 2, 3, 5, 8];
const STATES: usize = 20;
const SPAN: usize = 16;
const AXES: [Axis; 2] = [Axis::X, Axis::Y];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn power(x: &FockOperator, k: usize) -> FockOperator {
    (0..k).fold(FockOperator::identity(x.dim()).unwrap(), |acc, _| &acc * x)
}

fn moment_equivalence() -> Outcome {
    let start = Instant::now();
    let states = random_states(DEFAULT_SEED, STATES, SPAN);
    let grid = Grid1D::default_oracle();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for &n in &LEVELS {
        for axis in AXES {
            let ops: Vec<FockOperator> = (1..=6).map(|k| moment_operator(n, k, axis, 32).unwrap()).collect();
            for state in &states {
                let margin = oracle_margin(state, n, axis, &grid).unwrap();
                for (k, op) in (1..=6).zip(&ops) {
                    let closed = op.expectation(state).unwrap().re;
                    let quad = moment_of(&margin, k).value;
                    worst = worst.max((quad - closed).abs() / (1.0 + closed.abs()));
                    count += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-7 && secs < 60.0,
        format!("{count} comparisons, worst scaled error {worst:.2e} (tol 1e-7), {secs:.2} s (limit 60 s)"),
    )
}

fn first_second_closed_forms() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 0..=50 {
        let p1 = moment_polynomial(n, 1).unwrap().coeffs;
        let p2 = moment_polynomial(n, 2).unwrap().coeffs;
        for (c, w) in p1.iter().zip([0.0, 1.0]).chain(p2.iter().zip([n as f64 + 0.5, 0.0, 1.0])) {
            worst = worst.max((c - w).abs());
        }
    }
    outcome(worst <= 1e-12, format!("p1 = t, p2 = t^2 + n + 1/2 for n <= 50, worst {worst:.2e} (tol 1e-12)"))
}

fn number_and_ladder_consistency() -> Outcome {
    let dim = 32;
    let number = build_number(dim).unwrap();
    let (raise, lower) = build_ladder(dim).unwrap();
    let half_sq = RealPolynomial::new(vec![0.0, 0.0, 0.5]).unwrap();
    let t = RealPolynomial::new(vec![0.0, FRAC_1_SQRT_2]).unwrap();
    let minus_t = RealPolynomial::new(vec![0.0, -FRAC_1_SQRT_2]).unwrap();
    let (mut worst_n, mut worst_a): (f64, f64) = (0.0, 0.0);
    for n in 0..=8 {
        let sum = quantize_sum(&half_sq, &half_sq, n, dim).unwrap();
        assert_eq!(sum.operator.exact_rows(), dim - 2);
        let want = number.shifted(Complex64::new(n as f64 + 1.0, 0.0));
        worst_n = worst_n.max(sum.operator.max_abs_diff_on_block(&want, sum.operator.exact_rows()));
        let plus = quantize_complex(&t, &t, n, dim).unwrap();
        let minus = quantize_complex(&t, &minus_t, n, dim).unwrap();
        worst_a = worst_a
            .max(plus.operator.max_abs_diff_on_block(&lower, plus.operator.exact_rows()))
            .max(minus.operator.max_abs_diff_on_block(&raise, minus.operator.exact_rows()));
    }
    outcome(
        worst_n <= 1e-10 && worst_a <= 1e-12,
        format!("N+(n+1)I worst {worst_n:.2e} (tol 1e-10), A-/A+ worst {worst_a:.2e} (tol 1e-12)"),
    )
}

fn q2k_lemma() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 1..=5 {
        worst = worst.max(q2k_polynomial_check(k, k, k + 10).unwrap().max_rel_residual);
    }
    let fit = q2k_polynomial_check(1, 1, 11).unwrap();
    let coef_err = (fit.coeffs[1] - 1.0).abs().max((fit.coeffs[0] - 0.5).abs());
    outcome(
        worst <= 1e-8 && coef_err <= 1e-12,
        format!(
            "worst relative residual {worst:.2e} (tol 1e-8); k=1 fit ({:.15}, {:.15}), error {coef_err:.2e} (tol 1e-12)",
            fit.coeffs[1], fit.coeffs[0]
        ),
    )
}

fn mixture_theorem() -> Outcome {
    let dim = 16;
    let half = WeightSequence::from_dense(&[0.5, 0.5]).unwrap();
    let op = mixture_moment_operator(&half, 2, Axis::X, dim).unwrap();
    let (q, _) = build_qp(dim).unwrap();
    let want = power(&q, 2).shifted(Complex64::new(1.0, 0.0));
    let mix_err = op.max_abs_diff_on_block(&want, op.exact_rows());

    let verdicts = (1..=5).all(|k| {
        let kf = k as f64;
        !nseries_converges(&WeightSequence::power_law(kf + 1.0).unwrap(), k)
            && nseries_converges(&WeightSequence::power_law(kf + 2.0).unwrap(), k)
    });

    let mut reduce: f64 = 0.0;
    for m in [0usize, 1, 4, 9] {
        for axis in AXES {
            for k in 1..=8 {
                let a = mixture_moment_operator(&WeightSequence::delta(m), k, axis, 24).unwrap();
                let b = moment_operator(m, k, axis, 24).unwrap();
                reduce = reduce.max(a.max_abs_diff_on_block(&b, 24));
                let s = s_coefficients(&WeightSequence::delta(m), k).unwrap();
                let p = moment_polynomial(m, k).unwrap();
                reduce = reduce.max(s.iter().zip(&p.coeffs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
            }
        }
    }
    outcome(
        mix_err <= 1e-12 && verdicts && reduce <= 1e-12,
        format!("Q^2+I error {mix_err:.2e}, power-law verdicts {verdicts}, single-weight error {reduce:.2e} (tol 1e-12)"),
    )
}

fn density_margin_consistency() -> Outcome {
    let grid = Grid1D::default_oracle();
    let vac = phq_core::fock_space::FockVector::basis(0, 1).unwrap();
    let normal = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    let mut gauss: f64 = 0.0;
    for margin in [x_margin(&vac, 0, &grid).unwrap(), y_margin(&vac, 0, &grid).unwrap()] {
        for (x, v) in margin.grid.points().zip(&margin.values) {
            gauss = gauss.max((v - normal(x)).abs());
        }
    }

    let states = random_states(DEFAULT_SEED, STATES, SPAN);
    let dgrid = default_density_grid();
    let mut moment_err: f64 = 0.0;
    let mut mass_excess: f64 = 0.0;
    let mut count = 0;
    for &n in &LEVELS {
        for state in &states {
            let dens = density(state, &WeightSequence::delta(n), &dgrid, &dgrid).unwrap();
            // normalized within 1e-6 plus the reported leakage
            let mass = dens.total_mass();
            mass_excess = mass_excess.max((mass - 1.0).abs() - 1e-6 - dens.leakage.abs());
            for axis in AXES {
                let two_d = dens.marginal(axis);
                let one_d = oracle_margin(state, n, axis, &grid).unwrap();
                for k in 1..=6 {
                    moment_err = moment_err.max((two_d.moment(k) - one_d.moment(k)).abs());
                    count += 1;
                }
            }
        }
    }
    outcome(
        gauss <= 1e-8 && moment_err <= 1e-5 && mass_excess <= 0.0,
        format!(
            "Gaussian margin sup error {gauss:.2e} (tol 1e-8); {count} 2D-vs-1D moments, worst abs {moment_err:.2e} \
             (tol 1e-5); all densities normalized"
        ),
    )
}

fn parity_positivity() -> Outcome {
    let mut parity = true;
    let mut witness = true;
    for n in 0..=16 {
        for k in 1..=8 {
            let c = moment_polynomial(n, k).unwrap().coeffs;
            for (l, v) in c.iter().enumerate() {
                parity &= if (k - l) % 2 == 1 { *v == 0.0 } else { *v > 0.0 };
            }
            if k >= 2 {
                // c_0 is the witness for even k; for odd k it is an odd-gap
                // coefficient and vanishes, so c_(k-2) certifies instead
                witness &= if k % 2 == 0 { c[0] > 0.0 } else { c[k - 2] > 0.0 };
            }
        }
    }
    outcome(
        parity && witness,
        format!("exact zeros at odd k-l and positivity at even k-l: {parity}; p_k(Q) != Q^k witnessed: {witness}"),
    )
}

fn commutation_hygiene() -> Outcome {
    let mut comm_err: f64 = 0.0;
    for dim in [2usize, 8, 32, 64] {
        let (q, p) = build_qp(dim).unwrap();
        let c = q.commutator(&p);
        let want = FockOperator::identity(dim).unwrap().scale(Complex64::new(0.0, 1.0));
        comm_err = comm_err.max(c.max_abs_diff_on_block(&want, dim - 1));
    }
    let (q, p) = build_qp(40).unwrap();
    let (mut qm, mut pm) = (FockOperator::identity(40).unwrap(), FockOperator::identity(40).unwrap());
    let (mut qp_err, mut exact_rel): (f64, f64) = (0.0, 0.0);
    for m in 0..=12 {
        if m > 0 {
            qm = &qm * &q;
            pm = &pm * &p;
        }
        for n in 0..=16 {
            let (a, b) = (qm.get(n, n), pm.get(n, n));
            qp_err = qp_err.max((a - b).norm());
            let exact = q_moment(n, m);
            if exact != 0.0 {
                exact_rel = exact_rel.max((a.re - exact).abs() / exact);
            }
        }
    }
    outcome(
        comm_err <= 1e-12 && qp_err <= 1e-12,
        format!(
            "[Q,P]-iI worst {comm_err:.2e}; <n|Q^m|n>-<n|P^m|n> worst {qp_err:.2e} (tol 1e-12); \
             matrix powers vs integer route rel {exact_rel:.2e}"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        ("1 moment polynomials match margin quadrature", moment_equivalence),
        ("2 first and second moment closed forms", first_second_closed_forms),
        ("3 number-operator and ladder consistency", number_and_ladder_consistency),
        ("4 <n|Q^2k|n> is a degree-k polynomial in n", q2k_lemma),
        ("5 mixture moment operators", mixture_theorem),
        ("6 density and margin consistency", density_margin_consistency),
        ("7 parity and positivity of coefficients", parity_positivity),
        ("8 commutation and truncation hygiene", commutation_hygiene),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let o = check();
        let line = format!("{} criterion {name}: {}\n", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
        if !o.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
