#![cfg(all(feature = "native", unix))]

use std::collections::BTreeMap;
use std::time::Instant;

use holocr::vision::render::{render_via_command, RenderError, RenderTemplate, Renderer};
use holocr::vision::{CodeFormat, RasterImage};

/// A PNG on disk that a `cp`-based renderer double can hand back.
fn sample_png(dir: &std::path::Path) -> std::path::PathBuf {
    let path = dir.join("sample.png");
    let img = RasterImage::filled(4, 3, [9, 8, 7]).unwrap();
    std::fs::write(&path, img.encode_png().unwrap()).unwrap();
    path
}

#[test]
fn successful_double_returns_image() {
    let dir = tempfile::tempdir().unwrap();
    let png = sample_png(dir.path());
    let t = RenderTemplate::new(
        format!(
            "sh -c 'test -s {{input}} && cp {} {{output}}'",
            png.display()
        ),
        10.0,
    );
    let img = render_via_command("<svg></svg>", CodeFormat::Svg, Some(&t), dir.path()).unwrap();
    assert_eq!((img.width(), img.height()), (4, 3));
}

#[test]
fn failing_double_is_an_execution_failure() {
    let dir = tempfile::tempdir().unwrap();
    let t = RenderTemplate::new("sh -c 'echo boom >&2; exit 1' {input} {output}", 10.0);
    let err = render_via_command("x", CodeFormat::Svg, Some(&t), dir.path()).unwrap_err();
    assert!(err.is_execution_failure());
    match err {
        RenderError::Exit { stderr, .. } => assert_eq!(stderr, "boom"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn missing_output_is_an_execution_failure() {
    let dir = tempfile::tempdir().unwrap();
    let t = RenderTemplate::new("true {input} {output}", 10.0);
    let err = render_via_command("x", CodeFormat::Html, Some(&t), dir.path()).unwrap_err();
    assert!(matches!(err, RenderError::Output(_)));
}

#[test]
fn slow_double_times_out() {
    let dir = tempfile::tempdir().unwrap();
    let t = RenderTemplate::new("sh -c 'sleep 5' {input} {output}", 0.3);
    let start = Instant::now();
    let err = render_via_command("x", CodeFormat::Svg, Some(&t), dir.path()).unwrap_err();
    assert!(matches!(err, RenderError::Timeout(_)));
    assert!(start.elapsed().as_secs_f64() < 4.0);
}

#[test]
fn configuration_errors_are_not_counted() {
    let dir = tempfile::tempdir().unwrap();
    let err = render_via_command("x", CodeFormat::Svg, None, dir.path()).unwrap_err();
    assert!(matches!(err, RenderError::Config(_)));
    let missing = RenderTemplate::new("/no/such/renderer {input} {output}", 5.0);
    let err = render_via_command("x", CodeFormat::Svg, Some(&missing), dir.path()).unwrap_err();
    assert!(matches!(err, RenderError::Config(_)));
    assert!(!err.is_execution_failure());
    assert!(RenderTemplate::new("cat {input}", 5.0).validate().is_err());
}

#[test]
fn renderer_tracks_execution_rate() {
    let dir = tempfile::tempdir().unwrap();
    let png = sample_png(dir.path());
    let mut templates = BTreeMap::new();
    templates.insert(
        CodeFormat::Svg,
        RenderTemplate::new(
            format!(
                "sh -c 'grep -q ok {{input}} && cp {} {{output}}'",
                png.display()
            ),
            10.0,
        ),
    );
    templates.insert(
        CodeFormat::Html,
        RenderTemplate::new("/no/such/renderer {input} {output}", 5.0),
    );
    let r = Renderer::new(templates, dir.path().to_path_buf(), 2).unwrap();
    assert!(r.render("ok", CodeFormat::Svg).is_ok());
    assert!(r.render("bad", CodeFormat::Svg).is_err());
    assert!(r.render("ok", CodeFormat::Html).is_err());
    assert!(!r.supports(CodeFormat::LatexTikz));
    let stats = r.stats();
    assert_eq!((stats.attempts, stats.successes), (2, 1));
    assert_eq!(stats.rate(), Some(50.0));
}
