use num_bigint::BigInt;
use num_rational::BigRational;
use psra_core::fermi::{empty_probability, occupancy_dist_dp, occupancy_pmf, OccupancyModel};

fn uniform_rational(l: i64) -> Vec<BigRational> {
    (-l + 1..l)
        .map(|m| BigRational::new(BigInt::from(l - m), BigInt::from(2 * l)))
        .collect()
}

fn factorial(n: i64) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * k)
}

#[test]
fn uniform_empty_probability_is_exact() {
    for l in 1..=10i64 {
        let p0 = empty_probability(&uniform_rational(l));
        let expected = BigRational::new(factorial(2 * l), BigInt::from(2 * l).pow(2 * l as u32));
        assert_eq!(p0, expected, "L = {l}");
    }
}

#[test]
fn rational_pmf_sums_to_one_and_is_symmetric() {
    for l in 1..=8i64 {
        let pmf = occupancy_pmf(&uniform_rational(l));
        let total = pmf
            .iter()
            .fold(BigRational::from_integer(0.into()), |a, b| a + b);
        assert_eq!(total, BigRational::from_integer(1.into()));
        let n = pmf.len();
        for k in 0..n {
            assert_eq!(pmf[k], pmf[n - 1 - k]);
        }
    }
}

#[test]
fn floating_point_matches_rational() {
    use num_traits::ToPrimitive;
    for l in 1..=12u32 {
        let exact = occupancy_pmf(&uniform_rational(l as i64));
        let float = occupancy_dist_dp(&OccupancyModel::uniform(l).unwrap());
        for (e, f) in exact.iter().zip(&float.probs) {
            let e = e.to_f64().unwrap();
            assert!(
                (e - f).abs() <= 1e-14 * e.max(1e-300) + 1e-16,
                "L = {l}: {e} vs {f}"
            );
        }
    }
}
