use std::collections::BTreeMap;
use std::path::Path;

use eccrf::io::{self, PredictionRecord};
use eccrf::Error;
use eccrf_core::dataset::{make_folds, FoldPlan, LabelSet, LabelVocabulary, MimlBag, MimlDataset, MlcDataset, MlcExample};
use proptest::prelude::*;

fn vocab() -> LabelVocabulary {
    LabelVocabulary::new(["wren", "jay", "owl"]).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn format_line(e: Error) -> u64 {
    match e {
        Error::Format { line, .. } => line,
        other => panic!("expected a format error, got {other}"),
    }
}

#[test]
fn vocabulary_round_trip_and_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("v.txt");
    io::write_vocabulary(&p, &vocab()).unwrap();
    assert_eq!(io::read_vocabulary(&p).unwrap(), vocab());
    let bad = write(dir.path(), "bad.txt", "a\nb\na\n");
    assert_eq!(format_line(io::read_vocabulary(&bad).unwrap_err()), 3);
}

#[test]
fn mlc_parses_labels_and_rejects_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "m.csv", "id,f1,f2,labels\na,1.5,-2,wren;owl\nb,0,1e-3,\n");
    let ds = io::read_mlc(&good, &vocab()).unwrap();
    assert_eq!(ds.dim(), 2);
    assert_eq!(ds.examples()[0].y.indices().collect::<Vec<_>>(), vec![0, 2]);
    assert_eq!(ds.examples()[1].y.count(), 0);

    let nan = write(dir.path(), "nan.csv", "id,f1,labels\na,1,\nb,NaN,\n");
    assert_eq!(format_line(io::read_mlc(&nan, &vocab()).unwrap_err()), 3);
    let unknown = write(dir.path(), "u.csv", "id,f1,labels\na,1,eagle\n");
    let msg = io::read_mlc(&unknown, &vocab()).unwrap_err().to_string();
    assert!(msg.contains(":2:") && msg.contains("eagle"), "{msg}");
    let text = write(dir.path(), "t.csv", "id,f1,labels\na,x,\n");
    assert_eq!(format_line(io::read_mlc(&text, &vocab()).unwrap_err()), 2);
    let header = write(dir.path(), "h.csv", "id,g1,labels\na,1,\n");
    assert_eq!(format_line(io::read_mlc(&header, &vocab()).unwrap_err()), 1);
    let dup = write(dir.path(), "d.csv", "id,f1,labels\na,1,\na,2,\n");
    assert!(io::read_mlc(&dup, &vocab()).is_err());
}

#[test]
fn miml_groups_segments_and_keeps_empty_bags() {
    let dir = tempfile::tempdir().unwrap();
    let segs = write(dir.path(), "s.csv", "bag_id,f1,f2\nr1,1,2\nr2,3,4\nr1,5,6\n");
    let labels = write(dir.path(), "l.csv", "bag_id,labels\nr2,jay\nr3,\nr1,wren;jay\n");
    let ds = io::read_miml(&segs, &labels, &vocab()).unwrap();
    let ids: Vec<&str> = ds.ids().collect();
    assert_eq!(ids, ["r2", "r3", "r1"]);
    assert_eq!(ds.bags()[2].instances, vec![vec![1.0, 2.0], vec![5.0, 6.0]]);
    assert!(ds.bags()[1].instances.is_empty());

    let orphan = write(dir.path(), "o.csv", "bag_id,labels\nr1,\n");
    let msg = io::read_miml(&segs, &orphan, &vocab()).unwrap_err().to_string();
    assert!(msg.contains("r2"), "{msg}");
}

#[test]
fn folds_round_trip_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let ids: Vec<String> = (0..23).map(|i| format!("x{i}")).collect();
    let plan = make_folds(&ids, 5, 9).unwrap();
    let p = dir.path().join("folds.csv");
    io::write_folds(&p, &plan).unwrap();
    let back = io::read_folds(&p).unwrap();
    assert_eq!(back.assignment(), plan.assignment());
    assert_eq!(back.fold_count(), 5);

    let gap = write(dir.path(), "gap.csv", "id,fold\na,0\nb,2\n");
    assert!(io::read_folds(&gap).is_err());
    let dup = write(dir.path(), "dup.csv", "id,fold\na,0\na,1\n");
    assert_eq!(format_line(io::read_folds(&dup).unwrap_err()), 3);
    let uneven: BTreeMap<String, usize> = [("a", 0), ("b", 1), ("c", 1)].iter().map(|&(k, v)| (k.to_string(), v)).collect();
    assert_eq!(FoldPlan::from_assignment(2, uneven).unwrap().fold_sizes(), vec![1, 2]);
}

#[test]
fn predictions_round_trip_and_vocabulary_check() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    let records = vec![
        PredictionRecord { id: "a".into(), labels: LabelSet::from_indices(3, &[1]).unwrap(), scores: vec![0.1, 0.9, 1.0 / 3.0] },
        PredictionRecord { id: "b,c".into(), labels: LabelSet::empty(3), scores: vec![0.0, 0.0, 0.25] },
    ];
    io::write_predictions(&p, &vocab(), &records).unwrap();
    assert_eq!(io::read_predictions(&p, &vocab()).unwrap(), records);
    let other = LabelVocabulary::new(["wren", "owl", "jay"]).unwrap();
    assert_eq!(format_line(io::read_predictions(&p, &other).unwrap_err()), 1);
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -1e3..1e3f64, Just(0.0), Just(-0.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn mlc_round_trip(rows in proptest::collection::vec((proptest::collection::vec(finite(), 3), proptest::collection::vec(any::<bool>(), 3)), 0..12)) {
        let dir = tempfile::tempdir().unwrap();
        let examples: Vec<MlcExample> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (x, bits))| MlcExample { id: format!("id {i}"), x, y: LabelSet::from_bits(bits) })
            .collect();
        let ds = MlcDataset::new(vocab(), examples, 3).unwrap();
        let p = dir.path().join("m.csv");
        io::write_mlc(&p, &ds).unwrap();
        let back = io::read_mlc(&p, &vocab()).unwrap();
        prop_assert_eq!(back.len(), ds.len());
        for (a, b) in back.examples().iter().zip(ds.examples()) {
            prop_assert_eq!(&a.id, &b.id);
            prop_assert_eq!(&a.y, &b.y);
            let bits = |x: &[f64]| x.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&a.x), bits(&b.x));
        }
    }

    #[test]
    fn miml_round_trip(bags in proptest::collection::vec((proptest::collection::vec(proptest::collection::vec(finite(), 2), 0..4), proptest::collection::vec(any::<bool>(), 3)), 1..8)) {
        let dir = tempfile::tempdir().unwrap();
        let bags: Vec<MimlBag> = bags
            .into_iter()
            .enumerate()
            .map(|(i, (instances, bits))| MimlBag { id: format!("bag{i}"), instances, y: LabelSet::from_bits(bits) })
            .collect();
        let ds = MimlDataset::new(vocab(), 2, bags).unwrap();
        let (s, l) = (dir.path().join("s.csv"), dir.path().join("l.csv"));
        io::write_miml(&s, &l, &ds).unwrap();
        prop_assert_eq!(io::read_miml(&s, &l, &vocab()).unwrap(), ds);
    }
}
