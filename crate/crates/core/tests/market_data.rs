use std::io::{Read, Write};
use std::net::TcpListener;
use std::thread;

use chrono::NaiveDate;
use proptest::prelude::*;
use trendalpha::market_data::{
    fetch_csv, forward_fill, load_csv, read_csv, trim, typical_price, write_csv, ColumnSchema, DateRange, Field,
    PricePanel,
};
use trendalpha::Error;
use trendalpha_testkit::FixtureRng;

fn day(i: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 1, 1).unwrap() + chrono::Days::new(i as u64)
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()))
}

fn panels_equal(a: &PricePanel, b: &PricePanel) -> bool {
    a.dates() == b.dates()
        && a.tickers() == b.tickers()
        && Field::ALL.iter().all(|f| same_bits(a.field_matrix(*f), b.field_matrix(*f)))
}

fn fixture_csv(rng: &mut FixtureRng, n: usize) -> Vec<(NaiveDate, String)> {
    let mut close = 100.0;
    (0..n)
        .map(|i| {
            let open = close;
            close *= 1.0 + 0.01 * rng.normal();
            let hi = open.max(close) + 0.5;
            let lo = open.min(close) - 0.5;
            let vol = 1000 + rng.below(5000);
            let d = day(i);
            (d, format!("{d},{open:.4},{hi:.4},{lo:.4},{close:.4},{close:.4},{vol}"))
        })
        .collect()
}

const HEADER: &str = "Date,Open,High,Low,Close,Adj Close,Volume";

#[test]
fn shuffled_rows_load_sorted() {
    let mut rng = FixtureRng::new(3);
    let mut rows = fixture_csv(&mut rng, 50);
    let mut oracle: Vec<NaiveDate> = rows.iter().map(|r| r.0).collect();
    oracle.sort();
    for i in (1..rows.len()).rev() {
        rows.swap(i, rng.below(i + 1));
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("SPX.csv");
    let body: Vec<String> = std::iter::once(HEADER.to_string()).chain(rows.iter().map(|r| r.1.clone())).collect();
    std::fs::write(&path, body.join("\n")).unwrap();
    let panel = load_csv(&path, &ColumnSchema::default()).unwrap();
    assert_eq!(panel.dates(), oracle.as_slice());
    assert_eq!(panel.tickers(), ["SPX".to_string()]);
}

#[test]
fn duplicate_dates_are_rejected() {
    let text = format!("{HEADER}\n2020-01-02,1,2,1,1,1,10\n2020-01-02,1,2,1,1,1,10\n");
    assert!(matches!(read_csv(text.as_bytes(), "X", &ColumnSchema::default()), Err(Error::Integrity(_))));
}

fn fill_oracle(s: &[f64]) -> Vec<f64> {
    (0..s.len())
        .map(|t| (0..=t).rev().map(|k| s[k]).find(|v| !v.is_nan()).unwrap_or(f64::NAN))
        .collect()
}

fn holey_panel(seed: u64, tickers: usize, n: usize, hole_rate: f64) -> PricePanel {
    let mut rng = FixtureRng::new(seed);
    let mut cols: [Vec<f64>; 6] = Default::default();
    for col in cols.iter_mut() {
        for _ in 0..tickers * n {
            col.push(if rng.uniform() < hole_rate { f64::NAN } else { rng.range(1.0, 100.0) });
        }
    }
    PricePanel::from_parts((0..n).map(day).collect(), (0..tickers).map(|k| format!("T{k}")).collect(), cols).unwrap()
}

#[test]
fn forward_fill_matches_scan_oracle() {
    let panel = holey_panel(11, 3, 500, 0.2);
    let filled = forward_fill(&panel);
    for k in 0..3 {
        for f in Field::ALL {
            assert!(same_bits(filled.series(k, f), &fill_oracle(panel.series(k, f))));
        }
    }
    assert!(panels_equal(&forward_fill(&filled), &filled));
}

#[test]
fn trim_commutes_with_fill_when_trimmed_region_is_complete() {
    // Holes only inside the warm-up region.
    let mut panel = holey_panel(12, 2, 900, 0.0);
    let n = panel.n_dates();
    let mut cols: [Vec<f64>; 6] = Default::default();
    for f in Field::ALL {
        let mut m = panel.field_matrix(f).to_vec();
        for k in 0..2 {
            m[k * n + 10] = f64::NAN;
            m[k * n + 100] = f64::NAN;
        }
        cols[f.index()] = m;
    }
    panel = PricePanel::from_parts(panel.dates().to_vec(), panel.tickers().to_vec(), cols).unwrap();
    let a = trim(&forward_fill(&panel), 16, true).unwrap();
    let b = forward_fill(&trim(&panel, 16, true).unwrap());
    assert!(panels_equal(&a, &b));
}

#[test]
fn typical_price_matches_scalar_loop_and_lies_within_range() {
    let mut rng = FixtureRng::new(4);
    let rows = fixture_csv(&mut rng, 200);
    let text: Vec<String> = std::iter::once(HEADER.to_string()).chain(rows.into_iter().map(|r| r.1)).collect();
    let panel = read_csv(text.join("\n").as_bytes(), "X", &ColumnSchema::default()).unwrap();
    let tp = typical_price(&panel, 0);
    for t in 0..panel.n_dates() {
        let bar = panel.bar(0, t);
        let oracle = (bar.high + bar.low + bar.close) / 3.0;
        assert_eq!(tp[t], oracle);
        assert!(bar.low <= tp[t] && tp[t] <= bar.high);
    }
}

fn ten_digits() -> impl Strategy<Value = f64> {
    (1u64..9_999_999_999, 0i32..8).prop_map(|(m, e)| format!("{m}e-{e}").parse::<f64>().unwrap())
}

proptest! {
    #[test]
    fn write_then_load_is_identity(
        bars in prop::collection::vec((ten_digits(), ten_digits(), ten_digits(), ten_digits(), 0u64..10_000_000_000), 1..40)
    ) {
        let mut cols: [Vec<f64>; 6] = Default::default();
        for (a, b, c, adj, vol) in &bars {
            let (lo, hi) = (a.min(*b).min(*c), a.max(*b).max(*c));
            for (f, v) in Field::ALL.iter().zip([*a, hi, lo, *c, *adj, *vol as f64]) {
                cols[f.index()].push(v);
            }
        }
        let panel = PricePanel::from_parts((0..bars.len()).map(day).collect(), vec!["X".into()], cols).unwrap();
        let mut buf = Vec::new();
        write_csv(&panel, 0, &ColumnSchema::default(), &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), "X", &ColumnSchema::default()).unwrap();
        prop_assert!(panels_equal(&panel, &back));
    }
}

/// One-shot HTTP server answering every request with `response`.
fn serve(response: Vec<u8>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        if let Ok((mut stream, _)) = listener.accept() {
            let mut buf = [0u8; 4096];
            let _ = stream.read(&mut buf);
            let _ = stream.write_all(&response);
        }
    });
    format!("http://{addr}/{{ticker}}.csv?from={{start}}&to={{end}}")
}

fn http(status: &str, body: &str) -> Vec<u8> {
    format!(
        "HTTP/1.1 {status}\r\nContent-Type: text/csv\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .into_bytes()
}

fn range() -> DateRange {
    DateRange {
        start: day(0),
        end: day(30),
    }
}

#[test]
fn fetch_equals_local_load_and_caches_body() {
    let mut rng = FixtureRng::new(8);
    let rows = fixture_csv(&mut rng, 20);
    let body: String = std::iter::once(HEADER.to_string()).chain(rows.into_iter().map(|r| r.1)).collect::<Vec<_>>().join("\n");
    let dir = tempfile::tempdir().unwrap();
    let local_path = dir.path().join("SPX.csv");
    std::fs::write(&local_path, &body).unwrap();
    let local = load_csv(&local_path, &ColumnSchema::default()).unwrap();

    let cache = dir.path().join("cache");
    let url = serve(http("200 OK", &body));
    let fetched = fetch_csv(&url, "SPX", range(), &ColumnSchema::default(), &cache).unwrap();
    assert!(panels_equal(&fetched, &local));
    assert_eq!(std::fs::read_to_string(cache.join("SPX.csv")).unwrap(), body);
}

#[test]
fn not_found_carries_status() {
    let dir = tempfile::tempdir().unwrap();
    let url = serve(http("404 Not Found", "nope"));
    match fetch_csv(&url, "SPX", range(), &ColumnSchema::default(), dir.path()) {
        Err(Error::Fetch { status, retryable, .. }) => {
            assert_eq!(status, Some(404));
            assert!(!retryable);
        }
        other => panic!("expected fetch error, got {other:?}"),
    }
}

#[test]
fn truncated_bodies_emit_nothing() {
    let full = format!("{HEADER}\n2020-01-02,1,2,1,1,1,10\n2020-01-03,1,2,1,1,1,10\n");
    let cut = &full[..full.len() - 9];
    let dir = tempfile::tempdir().unwrap();

    // Body cut mid-row: well-formed HTTP, malformed CSV.
    let url = serve(http("200 OK", cut));
    let err = fetch_csv(&url, "A", range(), &ColumnSchema::default(), dir.path()).unwrap_err();
    assert!(matches!(err, Error::Row { line: 3, .. }), "{err:?}");

    // Connection closed before Content-Length bytes arrive.
    let mut response = format!(
        "HTTP/1.1 200 OK\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        full.len()
    )
    .into_bytes();
    response.extend_from_slice(cut.as_bytes());
    let url = serve(response);
    let err = fetch_csv(&url, "B", range(), &ColumnSchema::default(), dir.path()).unwrap_err();
    assert!(matches!(err, Error::Fetch { .. }), "{err:?}");

    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn connection_refused_is_retryable() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let dir = tempfile::tempdir().unwrap();
    let url = format!("http://127.0.0.1:{port}/{{ticker}}");
    let err = fetch_csv(&url, "A", range(), &ColumnSchema::default(), dir.path()).unwrap_err();
    assert!(err.is_retryable(), "{err:?}");
}
