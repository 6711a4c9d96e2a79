mod common;

use dwmsa::model::{load_instance, InstanceFormat};
use dwmsa::ProblemInstance;
use proptest::prelude::*;

use common::{random_instance, rng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_and_csv_round_trip(seed in any::<u64>(), p in 1usize..=4, n in 1usize..=30) {
        let inst = random_instance(&mut rng(seed), p, n);
        let json = inst.to_json_string();
        let back = ProblemInstance::from_json_reader(json.as_bytes()).unwrap();
        prop_assert_eq!(&back, &inst);
        let csv = inst.to_csv_string();
        let back = load_instance(csv.as_bytes(), InstanceFormat::Csv).unwrap();
        prop_assert_eq!(back.points, inst.points.clone());
    }
}
