use strz_core::verify::{criterion, CRITERIA};

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    for (id, _) in CRITERIA {
        let outcome = criterion(id).expect("known criterion");
        println!("{outcome}");
        if !outcome.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
