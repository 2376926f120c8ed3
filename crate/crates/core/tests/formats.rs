//! On-disk formats shared with external extractors.

use std::fs;

use probebench::embedding::{
    frames_to_bytes, read_embedding_file, read_frame_dir, EmbeddingError, EmbeddingSet, Manifest,
};
use probebench::table::{FeatureRow, FeatureTable, MISSING};
use probebench::text::{parse_annotations, write_annotations, Upos};

fn le(v: u32) -> [u8; 4] {
    v.to_le_bytes()
}

#[test]
fn emb1_bytes_by_hand() {
    let mut bytes = b"EMB1".to_vec();
    bytes.extend(le(2));
    bytes.extend(le(3));
    for id in ["a", "bé"] {
        bytes.extend(le(id.len() as u32));
        bytes.extend(id.as_bytes());
    }
    for v in [1.0f32, 2.0, 3.0, -1.0, 0.5, 0.25] {
        bytes.extend(v.to_le_bytes());
    }
    let set = EmbeddingSet::from_bytes(&bytes).unwrap();
    assert_eq!(set.ids(), ["a", "bé"]);
    assert_eq!(set.dim(), 3);
    assert_eq!(set.row(1), [-1.0, 0.5, 0.25]);
    assert_eq!(set.to_bytes(), bytes);
}

#[test]
fn emb1_rejects_damage() {
    let set = EmbeddingSet::new("m", "l", 2, vec!["x".into()], vec![1.0, 2.0]).unwrap();
    let good = set.to_bytes();

    let mut magic = good.clone();
    magic[3] = b'2';
    assert!(matches!(EmbeddingSet::from_bytes(&magic), Err(EmbeddingError::BadMagic(_))));

    let short = &good[..good.len() - 1];
    assert!(matches!(EmbeddingSet::from_bytes(short), Err(EmbeddingError::TruncatedFile { .. })));

    let mut long = good.clone();
    long.push(0);
    assert!(EmbeddingSet::from_bytes(&long).is_err());

    let mut nan = good;
    let n = nan.len();
    nan[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
    assert!(matches!(EmbeddingSet::from_bytes(&nan), Err(EmbeddingError::NonFinite { .. })));
}

#[test]
fn frame_dumps_are_time_averaged() {
    let dir = tempfile::tempdir().unwrap();
    let frames = |rows: &[[f32; 2]]| frames_to_bytes(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
    fs::write(dir.path().join("u1.emf"), frames(&[[1.0, 2.0], [3.0, 4.0]])).unwrap();
    fs::write(dir.path().join("u2.emf"), frames(&[[0.5, -0.5]])).unwrap();
    let bytes = fs::read(dir.path().join("u1.emf")).unwrap();
    assert_eq!(&bytes[..4], b"EMF1");
    assert_eq!(bytes.len(), 12 + 2 * 2 * 4);

    let set = read_frame_dir(dir.path()).unwrap();
    assert_eq!(set.ids(), ["u1", "u2"]);
    assert_eq!(set.row(0), [2.0, 3.0]);
    assert_eq!(set.row(1), [0.5, -0.5]);
}

#[test]
fn manifest_lines_resolve_against_their_directory() {
    let dir = tempfile::tempdir().unwrap();
    let set = EmbeddingSet::new("", "", 1, vec!["u".into()], vec![4.0]).unwrap();
    fs::create_dir(dir.path().join("emb")).unwrap();
    fs::write(dir.path().join("emb/l1.emb"), set.to_bytes()).unwrap();
    fs::write(
        dir.path().join("manifest.tsv"),
        "# model\tlayer\tpath\nhubert\tlayer1\temb/l1.emb\n\nbert\tlayer1\temb/l1.emb\n",
    )
    .unwrap();
    let m = Manifest::load(&dir.path().join("manifest.tsv")).unwrap();
    assert_eq!(m.models(), ["hubert", "bert"]);
    let loaded = m.entries[0].load().unwrap();
    assert_eq!((loaded.model(), loaded.layer()), ("hubert", "layer1"));
    assert_eq!(read_embedding_file(&m.entries[1].path).unwrap().row(0), [4.0]);

    let base = dir.path();
    assert!(Manifest::parse("random\tl\tx.emb\n", base).is_err());
    assert!(Manifest::parse("m\tl\tx.emb\nm\tl\ty.emb\n", base).is_err());
    assert!(Manifest::parse("m l x.emb\n", base).is_err());
}

#[test]
fn annotation_records_follow_the_schema() {
    let text = concat!(
        r#"{"id":"u1","tokens":[{"text":"Dogs","upos":"NOUN","head":2,"deprel":"nsubj"},"#,
        r#"{"text":"bark","upos":"VERB","head":0,"deprel":"root","tense":"Pres"},"#,
        r#"{"text":".","upos":"PUNCT","head":2,"deprel":"punct"}]}"#,
        "\n",
        r#"{"id":"u2","error":"parser timeout"}"#,
        "\n\n",
    );
    let file = parse_annotations(text).unwrap();
    assert_eq!(file.transcripts.len(), 1);
    assert_eq!(file.failures, [("u2".to_string(), "parser timeout".to_string())]);
    let t = &file.transcripts[0];
    assert_eq!(t.tokens[1].upos, Upos::Verb);
    assert_eq!(t.tokens[0].tense, None);

    let again = parse_annotations(&write_annotations(&file.transcripts)).unwrap();
    assert_eq!(again.transcripts, file.transcripts);
    assert!(!write_annotations(&file.transcripts).contains("\"tense\":null"));
}

#[test]
fn annotation_errors_name_the_line() {
    let bad_head = r#"{"id":"u","tokens":[{"text":"a","upos":"NOUN","head":5,"deprel":"root"}]}"#;
    let err = parse_annotations(&format!("\n{bad_head}\n")).unwrap_err().to_string();
    assert!(err.starts_with("line 2"), "{err}");

    let bad_tag = r#"{"id":"u","tokens":[{"text":"a","upos":"WORD","head":0,"deprel":"root"}]}"#;
    assert!(parse_annotations(bad_tag).is_err());

    let rootless = r#"{"id":"u","tokens":[{"text":"a","upos":"NOUN","head":1,"deprel":"dep"}]}"#;
    assert!(parse_annotations(rootless).is_err());
}

#[test]
fn feature_table_round_trips_missing_values() {
    let mut t = FeatureTable::new(vec!["speaking_rate".into(), "tense".into()]);
    t.push(FeatureRow {
        id: "u2".into(),
        values: vec![Some(2.5), None],
        status: "text: tense undetermined".into(),
    })
    .unwrap();
    t.push(FeatureRow {
        id: "u10".into(),
        values: vec![Some(0.1 + 0.2), Some(1.0)],
        status: String::new(),
    })
    .unwrap();
    let tsv = t.to_tsv();
    assert!(tsv.starts_with("id\tspeaking_rate\ttense\tstatus\n"));
    assert!(tsv.contains(&format!("\t{MISSING}\t")));
    let back = FeatureTable::parse(&tsv).unwrap();
    assert_eq!(back.to_tsv(), tsv);
    assert_eq!(back.get("u10", "speaking_rate"), Some(0.1 + 0.2));
    assert_eq!(back.get("u2", "tense"), None);
    assert!(FeatureTable::parse("id\tx\tstatus\nu\t1\tok\nu\t2\tok\n").is_err());
}
