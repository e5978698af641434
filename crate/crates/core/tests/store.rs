use std::collections::BTreeSet;

use rand::Rng;
use tscdn_core::store::{hash_content, ContentStore, ObjectKey};
use tscdn_testkit::synth::{self, at};

fn keys(s: &ContentStore) -> BTreeSet<ObjectKey> {
    s.objects().map(|o| o.key()).collect()
}

fn filled(root: &std::path::Path, archive: &str, blobs: &[(String, Vec<u8>)]) -> ContentStore {
    let mut s = ContentStore::open(root).unwrap();
    for (name, bytes) in blobs {
        s.ingest_file(archive, name, bytes, at(0)).unwrap();
    }
    s.save().unwrap();
    s
}

fn random_blobs(rng: &mut rand::rngs::StdRng, n: usize, prefix: &str) -> Vec<(String, Vec<u8>)> {
    (0..n)
        .map(|i| {
            let ext = ["jpg", "mp4", "png"][rng.random_range(0..3)];
            let content = vec![rng.random_range(0..12u8); rng.random_range(1..40)];
            (format!("{prefix}/{i}.{ext}"), content)
        })
        .collect()
}

#[test]
fn dedup_soundness_against_pairwise_oracle() {
    let mut rng = synth::rng(17);
    let blobs = random_blobs(&mut rng, 1000, "f");
    let dir = tempfile::tempdir().unwrap();
    let store = filled(dir.path(), "a", &blobs);
    let ext = |n: &str| n.rsplit('.').next().unwrap().to_string();
    let mut distinct = 0;
    for i in 0..blobs.len() {
        let seen = (0..i).any(|j| blobs[j].1 == blobs[i].1 && ext(&blobs[j].0) == ext(&blobs[i].0));
        if !seen {
            distinct += 1;
        }
    }
    assert_eq!(store.object_count(), distinct);
    let before: u64 = blobs.iter().map(|b| b.1.len() as u64).sum();
    let after: u64 = store.objects().map(|o| o.size).sum();
    let stats = store.stats();
    assert_eq!(stats.total.bytes_before, before);
    assert_eq!(stats.total.bytes_after, after);
    assert!(after <= before);
    for o in store.objects() {
        let name = o.stored_name();
        assert!(name.starts_with(&hash_content(&std::fs::read(store.object_path(&name)).unwrap()).to_string()));
    }
}

#[test]
fn merge_is_associative_and_idempotent() {
    let mut rng = synth::rng(29);
    let tmp = tempfile::tempdir().unwrap();
    let sets: Vec<_> = ["a", "b", "c"].iter().map(|p| random_blobs(&mut rng, 60, p)).collect();
    let mk = |name: &str, i: usize| filled(&tmp.path().join(name), ["a", "b", "c"][i], &sets[i]);

    // (A ∪ B) ∪ C
    let mut left = mk("l_a", 0);
    left.merge_from(&mk("l_b", 1)).unwrap();
    left.merge_from(&mk("l_c", 2)).unwrap();
    // A ∪ (B ∪ C)
    let mut bc = mk("r_b", 1);
    bc.merge_from(&mk("r_c", 2)).unwrap();
    let mut right = mk("r_a", 0);
    right.merge_from(&bc).unwrap();
    assert_eq!(keys(&left), keys(&right));

    let before = keys(&left);
    let copy = ContentStore::open_existing(left.root()).unwrap();
    let report = left.merge_from(&copy).unwrap();
    assert_eq!(report.objects_added, 0);
    assert_eq!(keys(&left), before);
}
