use std::path::Path;
use std::process::{Command, Output};

fn htfmlp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htfmlp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn generate_pacf_train_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    stdout(&htfmlp(&["generate", "--preset", "humidity", "--years", "2", "--seed", "4", "--out", "h.csv"], d));
    let csv = std::fs::read_to_string(d.join("h.csv")).unwrap();
    assert!(csv.starts_with("hour,value\n1,"));
    assert_eq!(csv.lines().count(), 2 * 8760 + 1);

    let pacf = stdout(&htfmlp(&["pacf", "--input", "h.csv", "--max-lag", "12"], d));
    assert!(pacf.contains("selected p = "), "{pacf}");
    let pacf_csv = stdout(&htfmlp(&["pacf", "--input", "h.csv", "--max-lag", "12", "--format", "csv"], d));
    assert_eq!(pacf_csv.lines().count(), 14);
    assert!(pacf_csv.starts_with("lag,acf,pacf\n0,1,1\n"));

    std::fs::write(d.join("quick.conf"), "max_epochs = 10\nrestarts = 2\n").unwrap();
    let train = stdout(&htfmlp(
        &["train", "--config", "quick.conf", "--input", "h.csv", "--predictor", "HTF-MLP-t", "--test-years", "1", "--save", "m.bin"],
        d,
    ));
    assert!(train.contains("test nRMSE"), "{train}");
    let bytes = std::fs::read(d.join("m.bin")).unwrap();
    let model = htfmlp::forecast::Predictor::from_bytes(&bytes).unwrap();
    assert_eq!(model.spec().name(), "HTF-MLP-t");

    std::fs::write(
        d.join("exp.conf"),
        "test_years = 1\nmax_epochs = 10\nrestarts = 2\noutput_csv = out/r.csv\noutput_text = out/r.txt\n\
         [series]\nname = h\ncsv = h.csv\n[predictor]\nname = P\n[predictor]\nname = CP\n[predictor]\nname = N-MLP\n",
    )
    .unwrap();
    let text = stdout(&htfmlp(&["bench", "--config", "exp.conf", "--seed", "3"], d));
    assert!(text.contains("# seed: 3"));
    assert_eq!(std::fs::read_to_string(d.join("out/r.txt")).unwrap(), text);
    let rerendered = stdout(&htfmlp(&["report", "--input", "out/r.csv", "--format", "csv"], d));
    assert_eq!(rerendered, std::fs::read_to_string(d.join("out/r.csv")).unwrap());
    let table = stdout(&htfmlp(&["report", "--input", "out/r.csv"], d));
    assert!(table.contains('*') && table.contains("N-MLP"), "{table}");
}

#[test]
fn errors_exit_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.csv"), "hour,value\n1,1\n3,2\n").unwrap();
    let out = htfmlp(&["pacf", "--input", "bad.csv"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = htfmlp(&["bench"], d);
    assert!(!out.status.success());
    std::fs::write(d.join("bad.conf"), "[series]\nname = x\nbogus = 1\n").unwrap();
    let out = htfmlp(&["bench", "--config", "bad.conf"], d);
    assert!(String::from_utf8_lossy(&out.stderr).contains("config line 3"));
}
