use grasp_core::augment::PixelGrid;
use grasp_core::grasp::GraspType;
use grasp_core::head::{xavier_init, TrainingHistory};
use grasp_core::{FeatureDataset, FeatureRow, GraspDistribution};
use grasp_kit::checkpoint::{self, CheckpointError};
use grasp_kit::config::{ConfigError, ExperimentConfig, FlatConfig};
use grasp_kit::gfea::{self, GfeaError};
use grasp_kit::pnm::{self, PnmError};
use grasp_kit::tables::{self, HistoryRow, TableError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_dataset(n: usize, dim: usize, seed: u64) -> FeatureDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|i| FeatureRow {
            image_id: format!("img {i}, \"quoted\""),
            features: (0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    100.0 * z
                })
                .collect(),
            label: GraspDistribution::from_weights(std::array::from_fn(|_| rng.random::<f64>())).unwrap(),
        })
        .collect();
    FeatureDataset::new(dim, rows).unwrap()
}

fn roundtrip(data: &FeatureDataset) -> FeatureDataset {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.gfea");
    gfea::write_feature_file(&path, data).unwrap();
    gfea::read_feature_file(&path).unwrap()
}

#[test]
fn empty_dataset_round_trips() {
    let empty = FeatureDataset::new(12, vec![]).unwrap();
    let back = roundtrip(&empty);
    assert!(back.is_empty());
    assert_eq!(back.feature_dim(), 12);
}

#[test]
fn random_dataset_round_trips_within_f32() {
    let data = random_dataset(37, 9, 1);
    let back = roundtrip(&data);
    assert_eq!(back.len(), data.len());
    for (a, b) in data.rows().iter().zip(back.rows()) {
        assert_eq!(a.image_id, b.image_id);
        assert_eq!(a.label, b.label);
        for (&x, &y) in a.features.iter().zip(&b.features) {
            assert_eq!(y, x as f32 as f64);
        }
    }
    // A second pass is exact.
    assert_eq!(roundtrip(&back), back);
}

#[test]
fn header_layout_is_little_endian() {
    let bytes = gfea::encode_payload(&random_dataset(3, 2, 2)).unwrap();
    assert_eq!(&bytes[..4], b"GFEA");
    assert_eq!(&bytes[4..14], &[1, 0, 3, 0, 0, 0, 2, 0, 0, 0]);
    assert_eq!(bytes.len(), 14 + 3 * 2 * 4);
}

#[test]
fn corrupt_payloads_are_rejected() {
    let bytes = gfea::encode_payload(&random_dataset(4, 3, 3)).unwrap();
    assert!(matches!(
        gfea::decode_payload(&bytes[..bytes.len() - 1]),
        Err(GfeaError::LengthMismatch { expected: 62, actual: 61 })
    ));
    assert!(matches!(gfea::decode_payload(&bytes[..9]), Err(GfeaError::LengthMismatch { .. })));
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(matches!(gfea::decode_payload(&extra), Err(GfeaError::LengthMismatch { .. })));
    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(matches!(gfea::decode_payload(&magic), Err(GfeaError::BadMagic)));
    let mut version = bytes;
    version[4] = 9;
    assert!(matches!(gfea::decode_payload(&version), Err(GfeaError::VersionUnsupported(9))));
}

#[test]
fn manifest_must_match_payload() {
    let data = random_dataset(3, 2, 4);
    let bytes = gfea::encode_payload(&data).unwrap();
    let mut manifest = Vec::new();
    gfea::write_manifest(&mut manifest, &data.subset(&[0, 1])).unwrap();
    assert!(matches!(gfea::assemble(&bytes, manifest.as_slice()), Err(GfeaError::ManifestMismatch(_))));

    let renumbered = "row,image_id,p0,p1,p2,p3,p4\n0,a,1,0,0,0,0\n2,b,1,0,0,0,0\n1,c,1,0,0,0,0\n";
    assert!(matches!(gfea::assemble(&bytes, renumbered.as_bytes()), Err(GfeaError::ManifestMismatch(_))));

    let bad_label = "row,image_id,p0,p1,p2,p3,p4\n0,a,1,0,0,0,0\n1,b,0.5,0.6,0,0,0\n2,c,1,0,0,0,0\n";
    assert!(matches!(gfea::assemble(&bytes, bad_label.as_bytes()), Err(GfeaError::Label { row: 1, .. })));
}

#[test]
fn missing_manifest_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lonely.gfea");
    std::fs::write(&path, gfea::encode_payload(&random_dataset(1, 1, 5)).unwrap()).unwrap();
    let err = gfea::read_feature_file(&path).unwrap_err();
    assert!(err.to_string().contains("lonely.manifest.csv"), "{err}");
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let head = xavier_init(11, 3);
    let bytes = checkpoint::encode(&head);
    assert_eq!(&bytes[..4], b"GHED");
    assert_eq!(checkpoint::decode(&bytes).unwrap(), head);
}

#[test]
fn corrupt_checkpoints_are_rejected() {
    let bytes = checkpoint::encode(&xavier_init(4, 1));
    assert!(matches!(checkpoint::decode(&bytes[..bytes.len() - 8]), Err(CheckpointError::LengthMismatch { .. })));
    assert!(matches!(checkpoint::decode(b"GHE"), Err(CheckpointError::BadMagic)));
    let mut v = bytes.clone();
    v[4] = 2;
    assert!(matches!(checkpoint::decode(&v), Err(CheckpointError::VersionUnsupported(2))));
    let mut widths = bytes;
    widths[12] = 7; // first hidden width 256 -> 263
    assert!(matches!(checkpoint::decode(&widths), Err(CheckpointError::BadDims(_))));
}

#[test]
fn pnm_round_trip_and_comments() {
    let rgb = PixelGrid::new(3, 2, 3, (0..18).collect()).unwrap();
    assert_eq!(pnm::decode(&pnm::encode(&rgb)).unwrap(), rgb);
    let gray = PixelGrid::new(2, 2, 1, vec![0, 255, 7, 9]).unwrap();
    assert_eq!(pnm::decode(&pnm::encode(&gray)).unwrap(), gray);

    let mut commented = b"P5\n# made by hand\n2 # width\n2\n255\n".to_vec();
    commented.extend_from_slice(&[0, 255, 7, 9]);
    assert_eq!(pnm::decode(&commented).unwrap(), gray);

    assert!(matches!(pnm::decode(b"P3\n1 1\n255\n0 0 0"), Err(PnmError::BadMagic)));
    assert!(matches!(pnm::decode(b"P5\n1 1\n65535\n\0\0"), Err(PnmError::UnsupportedMaxval(65535))));
    assert!(matches!(pnm::decode(b"P5\n2 2\n255\n\0"), Err(PnmError::LengthMismatch { expected: 4, actual: 1 })));
}

#[test]
fn annotations_aggregate_by_first_appearance() {
    let csv = "# two objects\nobject_id,annotator_id,choice\nmug,a,0\nball,a,power sphere\nmug,b,Medium_Wrap\nmug,c,0\nball,b,2\n";
    let sets = tables::read_annotations(csv.as_bytes()).unwrap();
    assert_eq!(sets.len(), 2);
    assert_eq!(sets[0].object_id, "mug");
    assert_eq!(sets[0].choices, vec![GraspType::OpenPalm, GraspType::MediumWrap, GraspType::OpenPalm]);
    assert_eq!(sets[1].choices, vec![GraspType::PowerSphere; 2]);
}

#[test]
fn annotation_errors_carry_line_numbers() {
    let dup = "object_id,annotator_id,choice\nmug,a,0\nmug,a,1\n";
    assert!(matches!(tables::read_annotations(dup.as_bytes()), Err(TableError::Invalid { line: 3, .. })));
    let unknown = "object_id,annotator_id,choice\nmug,a,fist\n";
    assert!(matches!(tables::read_annotations(unknown.as_bytes()), Err(TableError::Label { line: 2, .. })));
}

#[test]
fn tables_round_trip() {
    let labels = vec![
        ("a".to_string(), GraspDistribution::new([0.1, 0.2, 0.3, 0.25, 0.15]).unwrap()),
        ("b".to_string(), GraspDistribution::one_hot(GraspType::PalmarPinch)),
    ];
    let mut buf = Vec::new();
    tables::write_labels(&mut buf, &labels).unwrap();
    assert_eq!(tables::read_labels(buf.as_slice()).unwrap(), labels);

    let h = TrainingHistory {
        phase: vec![1, 2],
        train_loss: vec![0.4, 0.1 + 0.2],
        val_loss: vec![0.5, 0.45],
        val_similarity: vec![0.6, 1.0 / 3.0],
        initial_train_loss: 0.5,
        initial_val_similarity: 0.25,
    };
    let rows = tables::history_rows(&h);
    assert_eq!(rows[0], HistoryRow { epoch: 0, phase: 0, train_loss: 0.5, val_angular_similarity: 0.25 });
    let mut buf = Vec::new();
    tables::write_history(&mut buf, &rows).unwrap();
    assert!(buf.starts_with(b"epoch,phase,train_loss,val_angular_similarity\n"));
    assert_eq!(tables::read_history(buf.as_slice()).unwrap(), rows);

    let stream = vec![(0.0, labels[0].1), (1.0 / 30.0, labels[1].1)];
    let mut buf = Vec::new();
    tables::write_stream(&mut buf, &stream).unwrap();
    assert_eq!(tables::read_stream(buf.as_slice()).unwrap(), stream);

    let cards = tables::read_cards(grasp_kit::BUNDLED_CARDS.as_bytes()).unwrap();
    let mut buf = Vec::new();
    tables::write_cards(&mut buf, cards.cards()).unwrap();
    assert_eq!(tables::read_cards(buf.as_slice()).unwrap(), cards);
}

#[test]
fn empty_tables_keep_headers() {
    let mut buf = Vec::new();
    tables::write_decisions(&mut buf, &[]).unwrap();
    assert_eq!(buf, b"t,p0,p1,p2,p3,p4,grasp,window_full\n");
    assert!(tables::read_decisions(buf.as_slice()).unwrap().is_empty());
}

#[test]
fn duplicate_card_names_are_rejected() {
    let csv = "name,top5_accuracy,flops\nx,0.9,10\nx,0.8,5\n";
    assert!(matches!(tables::read_cards(csv.as_bytes()), Err(TableError::Pareto(_))));
    let bad = "name,top5_accuracy,flops\nx,1.5,10\n";
    assert!(matches!(tables::read_cards(bad.as_bytes()), Err(TableError::Invalid { line: 2, .. })));
}

#[test]
fn flat_config_grammar() {
    let text = "# run settings\nseed = 42\n\nlr_phase1=0.01   # faster\nfeatures = data/toy.gfea\n";
    let c = ExperimentConfig::parse(text).unwrap();
    assert_eq!(c.seed, Some(42));
    assert_eq!(c.lr_phase1, Some(0.01));
    assert_eq!(c.features.as_deref(), Some(std::path::Path::new("data/toy.gfea")));
    assert_eq!(c.batch_size, None);

    assert_eq!(FlatConfig::parse("seed 42"), Err(ConfigError::Syntax { line: 1 }));
    assert!(matches!(FlatConfig::parse("a = 1\na = 2"), Err(ConfigError::Duplicate { line: 2, .. })));
    assert!(matches!(ExperimentConfig::parse("colour = red"), Err(ConfigError::UnknownKey(_))));
    assert!(matches!(ExperimentConfig::parse("seed = -1"), Err(ConfigError::BadValue { .. })));
}
