use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use wavedens::densities::density_by_name;
use wavedens::harness::make_basis;
use wavedens::pipeline::{fit_auto, PipelineConfig, Scaling};
use wavedens::threshold::RuleKind;
use wavedens::WaveletFamily;
use wavedens_ffi::*;

const HAAR_UNIT: &str = r#"{
  "basis": "haar", "d": 1, "j0": 0, "J": -1, "normalized": true, "coeff_norm": 1.0,
  "coefficients": [{"j": 0, "z": [0], "q": 0, "value": 1.0}]
}"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(wd_last_error_message()) }
        .to_str()
        .unwrap()
        .to_owned()
}

fn sample(name: &str, n: usize, seed: u64) -> (Vec<f64>, usize) {
    let s = density_by_name(name).unwrap().sample(n, seed).unwrap();
    (s.as_flat().to_vec(), s.dim())
}

struct Handles {
    s: *mut WdSample,
    b: *mut WdBasis,
}

impl Handles {
    fn new(data: &[f64], d: usize, family: &str) -> Self {
        let mut s = ptr::null_mut();
        let mut b = ptr::null_mut();
        let fam = CString::new(family).unwrap();
        unsafe {
            assert_eq!(wd_sample_new(data.as_ptr(), data.len() / d, d, &mut s), WdStatus::Ok);
            assert_eq!(wd_basis_new(fam.as_ptr(), &mut b), WdStatus::Ok);
        }
        Handles { s, b }
    }
}

impl Drop for Handles {
    fn drop(&mut self) {
        unsafe {
            wd_sample_free(self.s);
            wd_basis_free(self.b);
        }
    }
}

#[test]
fn hand_built_haar_model_evaluates() {
    let json = CString::new(HAAR_UNIT).unwrap();
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(wd_model_from_json(json.as_ptr(), &mut m), WdStatus::Ok);
        let mut d = 0;
        assert_eq!(wd_model_dim(m, &mut d), WdStatus::Ok);
        assert_eq!(d, 1);
        let mut count = 0;
        assert_eq!(wd_model_coefficient_count(m, &mut count), WdStatus::Ok);
        assert_eq!(count, 1);
        let xs = [0.25, 0.75, 1.5, -0.5];
        let mut out = [f64::NAN; 4];
        assert_eq!(wd_model_eval(m, xs.as_ptr(), 4, out.as_mut_ptr()), WdStatus::Ok);
        assert_eq!(out, [1.0, 1.0, 0.0, 0.0]);
        wd_model_free(m);
    }
}

#[test]
fn fit_auto_matches_the_rust_pipeline() {
    let (data, d) = sample("2d-gauss-mix-2", 400, 7);
    let h = Handles::new(&data, d, "db4");
    let mut m = ptr::null_mut();
    unsafe {
        let st = wd_fit_auto(
            h.s,
            h.b,
            2,
            WD_CRITERION_NORMALIZED,
            WD_RULE_JACKKNIFE,
            WD_SCALING_UNIT,
            &mut m,
        );
        assert_eq!(st, WdStatus::Ok, "{}", last_error());
    }
    let s = wavedens::SampleSet::new(data.clone(), d).unwrap();
    let mut cfg = PipelineConfig::new(make_basis(WaveletFamily::Daubechies(4)).unwrap());
    cfg.scaling = Scaling::UnitCube;
    let reference = fit_auto(&s, &cfg, Some(RuleKind::Jackknife)).unwrap().model_file();

    let probes: Vec<f64> = data[..40].to_vec();
    let mut got = vec![0.0; 20];
    unsafe {
        assert_eq!(wd_model_eval(m, probes.as_ptr(), 20, got.as_mut_ptr()), WdStatus::Ok);
        let mut count = 0;
        wd_model_coefficient_count(m, &mut count);
        assert_eq!(count, reference.model.kept_count());
    }
    for (row, g) in probes.chunks(2).zip(&got) {
        assert_eq!(*g, reference.density(row).unwrap());
    }
    unsafe { wd_model_free(m) };
}

#[test]
fn json_round_trip_preserves_values() {
    let (data, d) = sample("std-normal", 300, 3);
    let h = Handles::new(&data, d, "sym4");
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(
            wd_fit_auto(
                h.s,
                h.b,
                1,
                WD_CRITERION_UNNORMALIZED,
                WD_RULE_NONE,
                WD_SCALING_ZSCORE,
                &mut m
            ),
            WdStatus::Ok
        );
        let mut text = ptr::null_mut();
        assert_eq!(wd_model_to_json(m, &mut text), WdStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(wd_model_from_json(text, &mut back), WdStatus::Ok);
        wd_string_free(text);

        let xs: Vec<f64> = (0..50).map(|i| -4.0 + 0.16 * i as f64).collect();
        let mut a = vec![0.0; 50];
        let mut b = vec![0.0; 50];
        wd_model_eval(m, xs.as_ptr(), 50, a.as_mut_ptr());
        wd_model_eval(back, xs.as_ptr(), 50, b.as_mut_ptr());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-15 * x.abs().max(1.0), "{x} vs {y}");
        }
        wd_model_free(m);
        wd_model_free(back);
    }
}

#[test]
fn fixed_level_fit_and_selection() {
    let (data, d) = sample("uniform", 500, 11);
    let h = Handles::new(&data, d, "haar");
    unsafe {
        let mut j = -99;
        assert_eq!(
            wd_select_resolution(h.s, h.b, WD_CRITERION_NORMALIZED, WD_SCALING_NONE, &mut j),
            WdStatus::Ok
        );
        assert!((0..=9).contains(&j), "J-hat {j}");

        let mut m = ptr::null_mut();
        assert_eq!(wd_fit(h.s, h.b, 0, 2, 1, &mut m), WdStatus::Ok);
        let x = [0.5];
        let mut v = 0.0;
        assert_eq!(wd_model_eval(m, x.as_ptr(), 1, &mut v), WdStatus::Ok);
        assert!(v > 0.5 && v < 1.5, "{v}");
        wd_model_free(m);
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(wd_sample_new(ptr::null(), 3, 1, &mut s), WdStatus::NullPointer);
        assert!(s.is_null());
        assert!(last_error().contains("data"));
        assert_eq!(
            wd_sample_new([1.0].as_ptr(), 1, 1, ptr::null_mut()),
            WdStatus::NullPointer
        );

        let mut b = ptr::null_mut();
        assert_eq!(wd_basis_new(ptr::null(), &mut b), WdStatus::NullPointer);
        let mut j = 0;
        assert_eq!(
            wd_select_resolution(ptr::null(), ptr::null(), 0, 0, &mut j),
            WdStatus::NullPointer
        );
        let mut out = 0.0;
        assert_eq!(
            wd_model_eval(ptr::null(), [0.0].as_ptr(), 1, &mut out),
            WdStatus::NullPointer
        );
        let mut d = 0;
        assert_eq!(wd_model_dim(ptr::null(), &mut d), WdStatus::NullPointer);

        wd_sample_free(ptr::null_mut());
        wd_basis_free(ptr::null_mut());
        wd_model_free(ptr::null_mut());
        wd_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_arguments_are_reported() {
    let (data, d) = sample("std-normal", 100, 1);
    let h = Handles::new(&data, d, "db2");
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(
            wd_fit_auto(h.s, h.b, 2, 9, WD_RULE_NONE, WD_SCALING_UNIT, &mut m),
            WdStatus::InvalidArgument
        );
        assert!(last_error().contains("criterion"));
        assert_eq!(
            wd_fit_auto(h.s, h.b, 2, 0, 7, WD_SCALING_UNIT, &mut m),
            WdStatus::InvalidArgument
        );
        assert!(last_error().contains("rule"));
        assert_eq!(wd_fit_auto(h.s, h.b, 2, 0, 0, -1, &mut m), WdStatus::InvalidArgument);
        assert!(last_error().contains("scaling"));
        assert_eq!(wd_fit(h.s, h.b, 3, 1, 1, &mut m), WdStatus::InvalidArgument);
        assert!(m.is_null());

        let fam = CString::new("db99").unwrap();
        let mut b = ptr::null_mut();
        assert_eq!(wd_basis_new(fam.as_ptr(), &mut b), WdStatus::InvalidArgument);
        assert!(b.is_null());

        let bad = CString::new("{not json").unwrap();
        assert_eq!(wd_model_from_json(bad.as_ptr(), &mut m), WdStatus::Data);
        assert!(!last_error().is_empty());

        let mut s = ptr::null_mut();
        assert_eq!(wd_sample_new([f64::NAN, 1.0].as_ptr(), 2, 1, &mut s), WdStatus::Data);
        assert!(s.is_null());
    }
}

#[test]
fn success_clears_the_error_message() {
    unsafe {
        let mut b = ptr::null_mut();
        assert_eq!(wd_basis_new(ptr::null(), &mut b), WdStatus::NullPointer);
        assert!(!last_error().is_empty());
        let fam = CString::new("haar").unwrap();
        assert_eq!(wd_basis_new(fam.as_ptr(), &mut b), WdStatus::Ok);
        assert_eq!(last_error(), "");
        wd_basis_free(b);
    }
}

fn header() -> (PathBuf, String) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/wavedens.h");
    let text = std::fs::read_to_string(&path).unwrap();
    (path, text)
}

#[test]
fn header_declares_the_whole_api() {
    let (_, h) = header();
    for f in [
        "wd_last_error_message",
        "wd_sample_new",
        "wd_sample_free",
        "wd_basis_new",
        "wd_basis_free",
        "wd_select_resolution",
        "wd_fit",
        "wd_fit_auto",
        "wd_model_eval",
        "wd_model_dim",
        "wd_model_coefficient_count",
        "wd_model_to_json",
        "wd_model_from_json",
        "wd_string_free",
        "wd_model_free",
    ] {
        assert!(
            h.contains(&format!(" {f}(")) || h.contains(&format!("*{f}(")),
            "missing {f}"
        );
    }
    for c in [
        "WD_STATUS_OK = 0",
        "WD_STATUS_PANIC = 6",
        "WD_RULE_JACKKNIFE 3",
        "WD_SCALING_NONE 2",
    ] {
        assert!(h.contains(c), "missing {c}");
    }
    assert!(h.contains("typedef struct WdModel WdModel;"));
}

#[test]
fn header_compiles_as_c() {
    let (path, _) = header();
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler; skipped");
        return;
    };
    let dir = tempdir();
    let src = dir.join("use.c");
    std::fs::write(
        &src,
        "#include \"wavedens.h\"\nint main(void) {\n  WdModel *m = NULL;\n  WdStatus st = wd_model_from_json(\"{}\", &m);\n  wd_model_free(m);\n  return st == WD_STATUS_OK;\n}\n",
    )
    .unwrap();
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(path.parent().unwrap())
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc);
        }
    }
    Err(())
}

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wavedens-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
