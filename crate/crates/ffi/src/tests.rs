use super::*;

use std::ffi::CStr;
use std::ptr;

use marginfit::svm::DEFAULT_COST;

/// Deterministic interleaved binary design with outcome Y = 2 T + z1 +
/// 0.1 z2. The arms overlap, so a C=1 fit keeps a nonempty margin.
fn overlapping_design(n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let p = 2;
    let mut z = vec![0.0; n * p];
    let mut t = vec![0.0; n];
    let mut y = vec![0.0; n];
    for i in 0..n {
        let ti = (i % 2) as f64;
        let z1 = 2.0 * (i as f64) / ((n - 1) as f64) - 1.0 + 0.3 * ti;
        let z2 = ((i * 7 % n) as f64) / ((n - 1) as f64) - 0.5;
        z[i * p] = z1;
        z[i * p + 1] = z2;
        t[i] = ti;
        y[i] = 2.0 * ti + z1 + 0.1 * z2;
    }
    (z, t, y)
}

/// Two clouds around z1 = -2 and z1 = +2; hull distance 4 - 0.2.
fn separated_design() -> (Vec<f64>, Vec<f64>) {
    let mut z = Vec::new();
    let mut t = Vec::new();
    for i in 0..10 {
        let off = 0.01 * i as f64;
        z.extend_from_slice(&[-2.0 - off, off]);
        t.push(0.0);
        z.extend_from_slice(&[2.0 + off, -off]);
        t.push(1.0);
    }
    (z, t)
}

unsafe fn make_dataset(z: &[f64], n: usize, p: usize, t: &[f64], y: Option<&[f64]>) -> *mut MarginfitDataset {
    let mut out: *mut MarginfitDataset = ptr::null_mut();
    let status = marginfit_dataset_new(
        z.as_ptr(),
        n,
        p,
        t.as_ptr(),
        MarginfitTreatmentKind::Binary,
        y.map_or(ptr::null(), |y| y.as_ptr()),
        &mut out,
    );
    assert_eq!(status, MarginfitStatus::Ok, "{:?}", last_error());
    assert!(!out.is_null());
    out
}

fn last_error() -> String {
    unsafe {
        CStr::from_ptr(marginfit_last_error_message())
            .to_string_lossy()
            .into_owned()
    }
}

#[test]
fn version_is_a_semver_string() {
    let v = unsafe { CStr::from_ptr(marginfit_version()) };
    let v = v.to_str().unwrap();
    assert_eq!(v.split('.').count(), 3, "{v}");
}

#[test]
fn dataset_roundtrip_reports_dimensions() {
    let (z, t, y) = overlapping_design(40);
    unsafe {
        let d = make_dataset(&z, 40, 2, &t, Some(&y));
        let mut n = 0usize;
        let mut p = 0usize;
        assert_eq!(marginfit_dataset_n(d, &mut n), MarginfitStatus::Ok);
        assert_eq!(marginfit_dataset_p(d, &mut p), MarginfitStatus::Ok);
        assert_eq!((n, p), (40, 2));
        marginfit_dataset_free(d);
    }
}

#[test]
fn null_arguments_are_reported_with_a_message() {
    let (z, t, _) = overlapping_design(10);
    unsafe {
        let status = marginfit_dataset_new(
            ptr::null(),
            10,
            2,
            t.as_ptr(),
            MarginfitTreatmentKind::Binary,
            ptr::null(),
            &mut ptr::null_mut(),
        );
        assert_eq!(status, MarginfitStatus::NullPointer);
        assert!(last_error().contains("NULL"), "{}", last_error());

        let mut out: *mut MarginfitDataset = ptr::null_mut();
        let status = marginfit_dataset_new(
            z.as_ptr(),
            10,
            2,
            ptr::null(),
            MarginfitTreatmentKind::Binary,
            ptr::null(),
            &mut out,
        );
        assert_eq!(status, MarginfitStatus::NullPointer);
    }
}

#[test]
fn invalid_data_maps_to_typed_statuses() {
    unsafe {
        // Non-finite covariate.
        let z = [f64::NAN, 0.0, 1.0, 0.0];
        let t = [0.0, 1.0];
        let mut out: *mut MarginfitDataset = ptr::null_mut();
        let status = marginfit_dataset_new(
            z.as_ptr(),
            2,
            2,
            t.as_ptr(),
            MarginfitTreatmentKind::Binary,
            ptr::null(),
            &mut out,
        );
        assert_eq!(status, MarginfitStatus::NonFinite);
        assert!(!last_error().is_empty());

        // Single row.
        let z = [0.0, 1.0];
        let t = [1.0];
        let status = marginfit_dataset_new(
            z.as_ptr(),
            1,
            2,
            t.as_ptr(),
            MarginfitTreatmentKind::Binary,
            ptr::null(),
            &mut out,
        );
        assert_ne!(status, MarginfitStatus::Ok);

        // One-armed binary treatment.
        let z = [0.0, 1.0, 2.0, 3.0];
        let t = [1.0, 1.0];
        let status = marginfit_dataset_new(
            z.as_ptr(),
            2,
            2,
            t.as_ptr(),
            MarginfitTreatmentKind::Binary,
            ptr::null(),
            &mut out,
        );
        assert_eq!(status, MarginfitStatus::Schema);
    }
}

#[test]
fn fitted_model_exposes_a_consistent_decision_function() {
    let (z, t, _) = overlapping_design(40);
    unsafe {
        let d = make_dataset(&z, 40, 2, &t, None);
        let mut model: *mut MarginfitSvmModel = ptr::null_mut();
        let status = marginfit_svm_fit(d, DEFAULT_COST, -1.0, 0, &mut model);
        assert_eq!(status, MarginfitStatus::Ok, "{}", last_error());

        let mut dim = 0usize;
        assert_eq!(marginfit_svm_dim(model, &mut dim), MarginfitStatus::Ok);
        assert_eq!(dim, 2);
        let mut w = vec![0.0; dim];
        assert_eq!(
            marginfit_svm_weights(model, w.as_mut_ptr(), dim),
            MarginfitStatus::Ok
        );
        let mut b = 0.0;
        assert_eq!(marginfit_svm_bias(model, &mut b), MarginfitStatus::Ok);

        let probe = [0.25, -0.4];
        let mut f = 0.0;
        assert_eq!(
            marginfit_svm_decision_value(model, probe.as_ptr(), 2, &mut f),
            MarginfitStatus::Ok
        );
        let by_hand = w[0] * probe[0] + w[1] * probe[1] - b;
        assert!((f - by_hand).abs() < 1e-12, "{f} vs {by_hand}");

        // Wrong probe dimension.
        let mut g = 0.0;
        assert_eq!(
            marginfit_svm_decision_value(model, probe.as_ptr(), 1, &mut g),
            MarginfitStatus::DimensionMismatch
        );

        marginfit_svm_free(model);
        marginfit_dataset_free(d);
    }
}

#[test]
fn margin_width_matches_hull_distance_on_separated_arms() {
    let (z, t) = separated_design();
    unsafe {
        let d = make_dataset(&z, 20, 2, &t, None);

        let mut overlap = true;
        let mut distance = 0.0;
        assert_eq!(
            marginfit_overlap_check(d, -1.0, &mut overlap, &mut distance),
            MarginfitStatus::Ok
        );
        assert!(!overlap);

        let mut model: *mut MarginfitSvmModel = ptr::null_mut();
        assert_eq!(
            marginfit_svm_fit(d, 1e6, 1e-10, 1_000_000, &mut model),
            MarginfitStatus::Ok,
            "{}",
            last_error()
        );
        let mut width = 0.0;
        assert_eq!(
            marginfit_svm_margin_width(model, &mut width),
            MarginfitStatus::Ok
        );
        assert!(
            (width - distance).abs() / distance < 1e-5,
            "width {width}, hull distance {distance}"
        );

        // Hard-margin fit on separated arms keeps nobody.
        let mut count = usize::MAX;
        assert_eq!(
            marginfit_margin_count(model, d, -1.0, &mut count),
            MarginfitStatus::Ok
        );
        assert_eq!(count, 0);

        marginfit_svm_free(model);
        marginfit_dataset_free(d);
    }
}

#[test]
fn overlapping_arms_report_overlap() {
    let (z, t, _) = overlapping_design(40);
    unsafe {
        let d = make_dataset(&z, 40, 2, &t, None);
        let mut overlap = false;
        let mut distance = f64::NAN;
        assert_eq!(
            marginfit_overlap_check(d, -1.0, &mut overlap, &mut distance),
            MarginfitStatus::Ok
        );
        assert!(overlap, "distance {distance}");
        marginfit_dataset_free(d);
    }
}

#[test]
fn margin_indices_roundtrip_and_respect_capacity() {
    let (z, t, _) = overlapping_design(40);
    unsafe {
        let d = make_dataset(&z, 40, 2, &t, None);
        let mut model: *mut MarginfitSvmModel = ptr::null_mut();
        assert_eq!(
            marginfit_svm_fit(d, DEFAULT_COST, -1.0, 0, &mut model),
            MarginfitStatus::Ok
        );

        let mut count = 0usize;
        assert_eq!(
            marginfit_margin_count(model, d, -1.0, &mut count),
            MarginfitStatus::Ok
        );
        assert!(count > 0, "overlapping arms at C=1 must keep someone");

        let mut idx = vec![0usize; count];
        let mut written = 0usize;
        assert_eq!(
            marginfit_margin_indices(model, d, -1.0, idx.as_mut_ptr(), count, &mut written),
            MarginfitStatus::Ok
        );
        assert_eq!(written, count);
        assert!(idx.windows(2).all(|w| w[0] < w[1]), "sorted unique rows");
        assert!(idx.iter().all(|&i| i < 40));

        let status = marginfit_margin_indices(
            model,
            d,
            -1.0,
            idx.as_mut_ptr(),
            count - 1,
            &mut written,
        );
        assert_eq!(status, MarginfitStatus::BufferTooSmall);

        marginfit_svm_free(model);
        marginfit_dataset_free(d);
    }
}

#[test]
fn margin_agrees_with_the_library_route() {
    let (z, t, y) = overlapping_design(36);
    unsafe {
        let d = make_dataset(&z, 36, 2, &t, Some(&y));
        let mut model: *mut MarginfitSvmModel = ptr::null_mut();
        assert_eq!(
            marginfit_svm_fit(d, DEFAULT_COST, -1.0, 0, &mut model),
            MarginfitStatus::Ok
        );
        let mut count = 0usize;
        assert_eq!(
            marginfit_margin_count(model, d, -1.0, &mut count),
            MarginfitStatus::Ok
        );

        let zm = Array2::from_shape_vec((36, 2), z.clone()).unwrap();
        let tv = TreatmentVector::from_values(&t, TreatmentKind::Binary).unwrap();
        let names = vec!["z1".into(), "z2".into()];
        let direct = Dataset::new(zm, tv, Some(y.iter().cloned().collect()), names).unwrap();
        let params = SvmParams::default();
        let direct_model = fit_linear_svm(&direct, &params).unwrap();
        let direct_margin = margin_set(&direct_model, &direct, DEFAULT_MARGIN_TOL).unwrap();
        assert_eq!(count, direct_margin.kept.len());

        marginfit_svm_free(model);
        marginfit_dataset_free(d);
    }
}

#[test]
fn exhausted_iteration_budget_maps_to_convergence() {
    let (z, t, _) = overlapping_design(40);
    unsafe {
        let d = make_dataset(&z, 40, 2, &t, None);
        let mut model: *mut MarginfitSvmModel = ptr::null_mut();
        let status = marginfit_svm_fit(d, DEFAULT_COST, 1e-12, 1, &mut model);
        assert_eq!(status, MarginfitStatus::Convergence);
        assert!(model.is_null());
        assert!(last_error().contains("converge"), "{}", last_error());
        marginfit_dataset_free(d);
    }
}

#[test]
fn pipeline_estimate_matches_the_library_route() {
    let (z, t, y) = overlapping_design(60);
    unsafe {
        let d = make_dataset(&z, 60, 2, &t, Some(&y));
        let mut point = f64::NAN;
        let mut stderr = f64::NAN;
        let mut n_used = 0usize;
        let status =
            marginfit_pipeline_estimate(d, DEFAULT_COST, &mut point, &mut stderr, &mut n_used);
        assert_eq!(status, MarginfitStatus::Ok, "{}", last_error());
        assert!(point.is_finite() && stderr.is_finite() && n_used > 0);

        let zm = Array2::from_shape_vec((60, 2), z.clone()).unwrap();
        let tv = TreatmentVector::from_values(&t, TreatmentKind::Binary).unwrap();
        let names = vec!["z1".into(), "z2".into()];
        let direct = Dataset::new(zm, tv, Some(y.iter().cloned().collect()), names).unwrap();
        let result = margin_pipeline(&direct, &PipelineConfig::default()).unwrap();
        assert_eq!(point, result.estimates[0].point);
        assert_eq!(stderr, result.estimates[0].stderr);
        assert_eq!(n_used, result.estimates[0].n_used);

        marginfit_dataset_free(d);
    }
}

#[test]
fn missing_outcome_fails_the_pipeline_with_schema() {
    let (z, t, _) = overlapping_design(20);
    unsafe {
        let d = make_dataset(&z, 20, 2, &t, None);
        let mut point = 0.0;
        let mut stderr = 0.0;
        let mut n_used = 0usize;
        let status =
            marginfit_pipeline_estimate(d, DEFAULT_COST, &mut point, &mut stderr, &mut n_used);
        assert_eq!(status, MarginfitStatus::Schema);
        marginfit_dataset_free(d);
    }
}

#[test]
fn free_accepts_null() {
    unsafe {
        marginfit_dataset_free(ptr::null_mut());
        marginfit_svm_free(ptr::null_mut());
    }
}
