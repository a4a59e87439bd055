use std::sync::OnceLock;

use crcurv_core::calibration::CalibrationConfig;
use crcurv_core::sphere::*;
use crcurv_core::Calibration;
use proptest::prelude::*;

fn calib() -> &'static Calibration {
    static C: OnceLock<Calibration> = OnceLock::new();
    C.get_or_init(|| Calibration::compute(&CalibrationConfig::default()).unwrap())
}

fn quadric() -> impl Strategy<Value = CurvatureFamily> {
    (prop::array::uniform4(-1.0..1.0f64), prop::collection::vec(-1.0..1.0f64, 10)).prop_map(|(b, v)| {
        let mut a = [[0.0; 4]; 4];
        let mut c = 0;
        for i in 0..4 {
            for j in i..4 {
                a[i][j] = v[c];
                a[j][i] = v[c];
                c += 1;
            }
        }
        CurvatureFamily::Quadric { c: 6.0, b, a }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // A Morse function on S³ has Σ(−1)^m = χ(S³) = 0; a missed or doubled
    // point breaks it.
    #[test]
    fn index_sum_vanishes(fam in quadric()) {
        let k = CurvatureFunction::from_family(fam).unwrap();
        let Ok(s) = find_critical_points(&k, &GreenData::standard(calib()), calib(), &FinderConfig::default()) else {
            return Ok(());
        };
        let chi: i32 = s.records.iter().map(|r| if r.morse_index % 2 == 0 { 1 } else { -1 }).sum();
        prop_assert_eq!(chi, 0);
        for (i, a) in s.records.iter().enumerate() {
            for b in &s.records[..i] {
                prop_assert!(cr_distance(a.location, b.location) > 1e-3);
            }
        }
    }
}
