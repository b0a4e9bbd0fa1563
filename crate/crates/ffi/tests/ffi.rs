use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use amra_ffi::*;

fn image(rows: usize, cols: usize, ch: usize) -> Vec<f64> {
    (0..rows * cols * ch)
        .map(|i| ((i * 37 + 11) % 256) as f64)
        .collect()
}

fn last_error() -> String {
    let p = amra_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn transform_inverse_round_trip() {
    let img = image(64, 64, 3);
    let spec = CString::new("kind=fswt,wavelet=db3,level=3,boundary=reflect").unwrap();
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(amra_transform(img.as_ptr(), 64, 64, 3, spec.as_ptr(), &mut c), AmraStatus::Ok);
        let (mut r, mut cc, mut ch) = (0, 0, 0);
        assert_eq!(amra_coefficients_shape(c, &mut r, &mut cc, &mut ch), AmraStatus::Ok);
        assert_eq!((r, cc, ch), (77, 77, 3));
        assert_eq!(amra_coefficients_input_shape(c, &mut r, &mut cc, &mut ch), AmraStatus::Ok);
        assert_eq!((r, cc, ch), (64, 64, 3));
        let mut back = vec![0.0; r * cc * ch];
        assert_eq!(amra_inverse(c, back.as_mut_ptr(), back.len()), AmraStatus::Ok);
        let err = img.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
        assert_eq!(amra_inverse(c, back.as_mut_ptr(), 5), AmraStatus::Shape);
        amra_coefficients_free(c);
    }
}

#[test]
fn matches_the_library_bit_for_bit() {
    let img = image(32, 32, 1);
    let spec = "kind=samplet,m=3,level=2";
    let direct = amra::transforms::forward(
        &amra::ImageTensor::new(32, 32, 1, img.clone()).unwrap(),
        &spec.parse().unwrap(),
    )
    .unwrap();
    let cspec = CString::new(spec).unwrap();
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(amra_transform(img.as_ptr(), 32, 32, 1, cspec.as_ptr(), &mut c), AmraStatus::Ok);
        let data = std::slice::from_raw_parts(amra_coefficients_data(c), direct.data.len());
        assert!(data.iter().zip(&direct.data).all(|(a, b)| a.to_bits() == b.to_bits()));
        amra_coefficients_free(c);
    }
}

#[test]
fn layout_json_round_trip_and_normalize() {
    let img = image(32, 32, 1);
    let spec = CString::new("kind=dwt,wavelet=haar,level=2").unwrap();
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(amra_transform(img.as_ptr(), 32, 32, 1, spec.as_ptr(), &mut c), AmraStatus::Ok);
        let json = amra_coefficients_layout_json(c);
        assert!(!json.is_null());
        let mut d = ptr::null_mut();
        let data = amra_coefficients_data(c);
        assert_eq!(amra_coefficients_from_parts(data, 32, 32, 1, json, &mut d), AmraStatus::Ok);
        let mut n = ptr::null_mut();
        assert_eq!(amra_normalize(d, &mut n), AmraStatus::Ok);
        let nd = std::slice::from_raw_parts(amra_coefficients_data(n), 1024);
        let max = nd.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((max - 1.0).abs() < 1e-15);
        assert_eq!(
            amra_coefficients_from_parts(data, 16, 64, 1, json, &mut d),
            AmraStatus::Layout
        );
        amra_string_free(json);
        amra_coefficients_free(n);
        amra_coefficients_free(d);
        amra_coefficients_free(c);
    }
}

#[test]
fn features_and_errors() {
    let img = image(16, 16, 3);
    let spec = CString::new("kind=dwpt,wavelet=haar,level=1").unwrap();
    let mut f = ptr::null_mut();
    unsafe {
        assert_eq!(amra_extract_features(img.as_ptr(), 16, 16, 3, spec.as_ptr(), &mut f), AmraStatus::Ok);
        let (mut r, mut c, mut ch) = (0, 0, 0);
        assert_eq!(amra_image_shape(f, &mut r, &mut c, &mut ch), AmraStatus::Ok);
        assert_eq!((r, c, ch), (8, 8, 12));
        assert!(!amra_image_data(f).is_null());
        amra_image_free(f);

        let bad = CString::new("kind=fswt,wavelet=db99").unwrap();
        let mut out = ptr::null_mut();
        let s = amra_transform(img.as_ptr(), 16, 16, 3, bad.as_ptr(), &mut out);
        assert_eq!(s, AmraStatus::InvalidSpec);
        assert!(last_error().contains("db99"));
        assert!(out.is_null());
        assert_eq!(
            amra_transform(ptr::null(), 16, 16, 3, spec.as_ptr(), &mut out),
            AmraStatus::NullPointer
        );
        amra_coefficients_free(ptr::null_mut());
        assert!(amra_coefficients_data(ptr::null()).is_null());
    }
    let v = unsafe { CStr::from_ptr(amra_version()) };
    assert_eq!(v.to_str().unwrap(), amra_version_str());
}

fn amra_version_str() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/amra.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["amra_transform", "amra_inverse", "amra_normalize", "amra_last_error_message"] {
        assert!(text.contains(f), "header lacks {f}");
    }
    // Compile-check the header when a C compiler is around.
    let dir = tempfile_dir();
    let src = dir.join("check.c");
    std::fs::write(&src, "#include \"amra.h\"\nint main(void) { return AMRA_STATUS_OK; }\n").unwrap();
    let Ok(out) = Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler; header syntax not checked");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("amra-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
