use std::ffi::{c_char, CStr, CString};
use std::ptr;

use chromalg_ffi::*;

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { chromalg_string_free(s) };
    out
}

fn last_error() -> String {
    let p = chromalg_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn module_round_trip_and_exterior_power() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(chromalg_module_honda(3, 1, 6, 2, &mut m), ChromalgStatus::Ok);
        let mut rank = 0;
        assert_eq!(chromalg_module_rank(m, &mut rank), ChromalgStatus::Ok);
        assert_eq!(rank, 2);

        let mut json = ptr::null_mut();
        assert_eq!(chromalg_module_to_json(m, &mut json), ChromalgStatus::Ok);
        let json = take(json);
        let c = CString::new(json.clone()).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(chromalg_module_from_json(c.as_ptr(), &mut back), ChromalgStatus::Ok);
        let mut again = ptr::null_mut();
        chromalg_module_to_json(back, &mut again);
        assert_eq!(take(again), json);

        let mut passed = false;
        let mut report = ptr::null_mut();
        assert_eq!(chromalg_module_validate(m, &mut passed, &mut report), ChromalgStatus::Ok);
        assert!(passed);
        assert!(take(report).contains("checks"));
        assert_eq!(chromalg_module_validate(m, &mut passed, ptr::null_mut()), ChromalgStatus::Ok);

        let mut top = ptr::null_mut();
        assert_eq!(chromalg_module_exterior_power(m, 2, &mut top), ChromalgStatus::Ok);
        chromalg_module_rank(top, &mut rank);
        assert_eq!(rank, 1);

        let mut iso = true;
        assert_eq!(chromalg_module_detect_gm(m, &mut iso), ChromalgStatus::Ok);
        assert!(!iso);

        let mut gm = ptr::null_mut();
        assert_eq!(chromalg_module_gm(5, 1, 4, &mut gm), ChromalgStatus::Ok);
        assert_eq!(chromalg_module_detect_gm(gm, &mut iso), ChromalgStatus::Ok);
        assert!(iso);

        for h in [m, back, top, gm] {
            chromalg_module_free(h);
        }
        chromalg_module_free(ptr::null_mut());
    }
}

#[test]
fn laws() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(chromalg_law_honda(2, 2, 16, &mut g), ChromalgStatus::Ok);
        let (mut h, mut exact) = (0u32, false);
        assert_eq!(chromalg_law_height(g, &mut h, &mut exact), ChromalgStatus::Ok);
        assert_eq!((h, exact), (2, true));
        let mut v = ChromalgFglVerdict::Iso;
        assert_eq!(chromalg_law_detect_gm(g, 16, &mut v), ChromalgStatus::Ok);
        assert_eq!(v, ChromalgFglVerdict::NoNonzeroHom);
        assert_eq!(chromalg_law_detect_gm(g, 17, &mut v), ChromalgStatus::DegreeTooSmall);

        let mut json = ptr::null_mut();
        assert_eq!(chromalg_law_to_json(g, &mut json), ChromalgStatus::Ok);
        let c = CString::new(take(json)).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(chromalg_law_from_json(c.as_ptr(), &mut back), ChromalgStatus::Ok);
        chromalg_law_height(back, &mut h, &mut exact);
        assert_eq!(h, 2);

        let mut gm = ptr::null_mut();
        assert_eq!(chromalg_law_gm(3, 1, 12, &mut gm), ChromalgStatus::Ok);
        assert_eq!(chromalg_law_detect_gm(gm, 12, &mut v), ChromalgStatus::Ok);
        assert_eq!(v, ChromalgFglVerdict::Iso);

        let mut ga = ptr::null_mut();
        assert_eq!(chromalg_law_ga(3, 1, 12, &mut ga), ChromalgStatus::Ok);
        chromalg_law_height(ga, &mut h, &mut exact);
        assert!(!exact);

        for l in [g, back, gm, ga] {
            chromalg_law_free(l);
        }
    }
}

#[test]
fn certificates_and_f0() {
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(chromalg_certificate_build(2, 1, 3, &mut c), ChromalgStatus::Ok);
        let mut ok = false;
        assert_eq!(chromalg_certificate_verified(c, &mut ok), ChromalgStatus::Ok);
        assert!(ok);
        ok = false;
        assert_eq!(chromalg_certificate_replay(c, &mut ok), ChromalgStatus::Ok);
        assert!(ok);
        let mut json = ptr::null_mut();
        assert_eq!(chromalg_certificate_to_json(c, &mut json), ChromalgStatus::Ok);
        assert!(take(json).contains("\"VERIFIED\""));
        chromalg_certificate_free(c);

        let mut bad = ptr::null_mut();
        assert_eq!(chromalg_certificate_build(2, 1, 2, &mut bad), ChromalgStatus::OutOfRange);
        assert!(last_error().contains("n > h + 1"));
        assert!(bad.is_null());

        let mut passed = false;
        let mut report = ptr::null_mut();
        assert_eq!(chromalg_f0_report(2, 1, 5, &mut passed, &mut report), ChromalgStatus::Ok);
        assert!(passed);
        assert!(take(report).contains("v^31f"));
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(chromalg_module_gm(4, 1, 3, &mut m), ChromalgStatus::NotPrime);
        assert!(last_error().contains("not prime"));

        let junk = CString::new("{\"ring\":").unwrap();
        assert_eq!(chromalg_module_from_json(junk.as_ptr(), &mut m), ChromalgStatus::Malformed);
        assert_eq!(chromalg_module_from_json(ptr::null(), &mut m), ChromalgStatus::NullPointer);
        let bytes = [0xffu8, 0];
        assert_eq!(chromalg_law_from_json(bytes.as_ptr().cast(), &mut ptr::null_mut()), ChromalgStatus::InvalidUtf8);

        let mut rank = 0;
        assert_eq!(chromalg_module_rank(ptr::null(), &mut rank), ChromalgStatus::NullPointer);
        assert_eq!(chromalg_module_gm(3, 1, 3, ptr::null_mut()), ChromalgStatus::NullPointer);

        assert!(!CStr::from_ptr(chromalg_version()).to_str().unwrap().is_empty());
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/chromalg.h");
    let src = include_str!("../src/lib.rs");
    let mut n = 0;
    for line in src.lines() {
        if let Some(rest) = line.split("extern \"C\" fn ").nth(1) {
            let name = rest.split('(').next().unwrap();
            assert!(header.contains(&format!("{name}(")), "{name} missing from header");
            n += 1;
        }
    }
    assert!(n > 20);
    assert!(header.contains("CHROMALG_STATUS_OK = 0"));
    assert!(header.contains("typedef struct ChromalgModule ChromalgModule;"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let dir = tempdir();
    let src = dir.join("probe.c");
    std::fs::write(&src, "#include \"chromalg.h\"\nint main(void) { return CHROMALG_STATUS_OK; }\n").unwrap();
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(out) = std::process::Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I", include])
            .arg(&src)
            .output()
        else {
            eprintln!("{compiler} not found, skipping");
            continue;
        };
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
    std::fs::remove_dir_all(dir).ok();
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("chromalg-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
