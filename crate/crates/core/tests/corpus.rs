use flawwalk::corpus;
use flawwalk::format::{parse_instance, write_instance};

#[test]
fn data_files_match_the_builders() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/corpus");
    let mut files = 0;
    for inst in corpus::all() {
        let path = format!("{dir}/{}.inst", inst.name());
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
        let parsed = parse_instance(&text).unwrap();
        assert_eq!(parsed, inst, "{path}");
        assert_eq!(write_instance(&parsed), text, "{path}");
        files += 1;
    }
    let on_disk = std::fs::read_dir(dir).unwrap().count();
    assert_eq!(files, on_disk);
}
