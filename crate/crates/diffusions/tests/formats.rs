use entrance_diffusions::io::{fmt_num, parse_csv, parse_grid, Header, Table};
use proptest::prelude::*;

proptest! {
    #[test]
    fn numbers_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt_num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(prop::array::uniform3(-1e6..1e6f64), 1..20), seed in any::<u64>()) {
        let mut t = Table::new(&["a", "b", "c"]);
        for r in rows {
            t.push(r.to_vec());
        }
        let h = Header::new("prop", None, Some(seed), None);
        let text = t.to_csv(&h);
        let back = parse_csv(&text).unwrap();
        prop_assert_eq!(back.to_csv(&h), text);
    }

    #[test]
    fn grid_points_stay_below_hi(lo in -10.0..10.0f64, width in 1e-3..10.0f64, n in 1usize..500) {
        let hi = lo + width;
        let step = width / n as f64;
        let g = parse_grid(&format!("{lo}:{hi}:{step}")).unwrap();
        prop_assert!(g.len() == n || g.len() == n + 1 || g.len() + 1 == n);
        prop_assert_eq!(g[0], lo);
        prop_assert!(g.iter().all(|&x| x < hi));
    }
}
