use crate::geometry::PointSet;

/// Empirical copula transform: coordinate `j` of point `i` becomes
/// `|{l : X_l^j ≤ X_i^j}| / n`. Ties share the largest rank of their group.
pub fn empirical_copula(ps: &PointSet) -> PointSet {
    let n = ps.len();
    let dim = ps.dim();
    let mut out = vec![0.0; n * dim];
    let mut order: Vec<usize> = (0..n).collect();
    for axis in 0..dim {
        let col = ps.column(axis);
        order.sort_unstable_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && col[order[end]] == col[order[start]] {
                end += 1;
            }
            let u = end as f64 / n as f64;
            for &i in &order[start..end] {
                out[i * dim + axis] = u;
            }
            start = end;
        }
    }
    PointSet::from_flat(out, dim).expect("ranks are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_of_small_sample() {
        let ps = PointSet::from_flat(vec![0.5, -1.2, 3.3], 1).unwrap();
        assert_eq!(empirical_copula(&ps).as_flat(), &[2.0 / 3.0, 1.0 / 3.0, 1.0]);
    }

    #[test]
    fn ties_use_less_or_equal_count() {
        let ps = PointSet::from_flat(vec![1.0, 1.0, 2.0], 1).unwrap();
        assert_eq!(empirical_copula(&ps).as_flat(), &[2.0 / 3.0, 2.0 / 3.0, 1.0]);
    }

    #[test]
    fn negative_zero_ties_with_zero() {
        let ps = PointSet::from_flat(vec![0.0, -0.0, 1.0], 1).unwrap();
        let u = empirical_copula(&ps);
        assert_eq!(u.as_flat()[0], u.as_flat()[1]);
    }

    #[test]
    fn per_axis_independent() {
        let ps = PointSet::from_rows(&[[3.0, 10.0], [1.0, 30.0], [2.0, 20.0], [4.0, 0.0]]).unwrap();
        let u = empirical_copula(&ps);
        assert_eq!(u.column(0), vec![0.75, 0.25, 0.5, 1.0]);
        assert_eq!(u.column(1), vec![0.5, 1.0, 0.75, 0.25]);
    }
}
