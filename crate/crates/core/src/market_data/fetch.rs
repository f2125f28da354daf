use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;

use super::{read_csv, ColumnSchema, PricePanel};
use crate::error::{Error, Result};

/// Inclusive calendar interval used to fill `{start}` / `{end}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// Substitutes `{ticker}`, `{start}` and `{end}` (as `YYYY-MM-DD`). Unix
/// timestamps are available as `{start_ts}` / `{end_ts}`.
pub fn expand_template(template: &str, ticker: &str, range: DateRange) -> String {
    let ts = |d: NaiveDate| d.and_hms_opt(0, 0, 0).map(|t| t.and_utc().timestamp()).unwrap_or(0);
    template
        .replace("{ticker}", ticker)
        .replace("{start_ts}", &ts(range.start).to_string())
        .replace("{end_ts}", &ts(range.end).to_string())
        .replace("{start}", &range.start.to_string())
        .replace("{end}", &range.end.to_string())
}

/// Downloads a ticker's CSV, parses it, and caches the body as
/// `<cache_dir>/<ticker>.csv`. Nothing is cached unless the body parses.
pub fn fetch_csv(
    url_template: &str,
    ticker: &str,
    range: DateRange,
    schema: &ColumnSchema,
    cache_dir: &Path,
) -> Result<PricePanel> {
    let url = expand_template(url_template, ticker, range);
    let body = download(&url)?;
    let panel = read_csv(body.as_bytes(), ticker, schema)?;

    fs::create_dir_all(cache_dir)?;
    let final_path = cache_dir.join(format!("{ticker}.csv"));
    let tmp_path = cache_dir.join(format!(".{ticker}.csv.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp_path)?;
        f.write_all(body.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp_path, &final_path)?;
    Ok(panel)
}

fn download(url: &str) -> Result<String> {
    let response = ureq::get(url).call().map_err(|e| match e {
        ureq::Error::StatusCode(status) => Error::Fetch {
            status: Some(status),
            retryable: status == 429 || status >= 500,
            message: format!("GET {url} returned {status}"),
        },
        other => Error::Fetch {
            status: None,
            retryable: true,
            message: format!("GET {url}: {other}"),
        },
    })?;
    response
        .into_body()
        .with_config()
        .limit(256 * 1024 * 1024)
        .read_to_string()
        .map_err(|e| Error::Fetch {
            status: None,
            retryable: true,
            message: format!("reading body of {url}: {e}"),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_expansion() {
        let range = DateRange {
            start: NaiveDate::from_ymd_opt(2013, 11, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(2024, 10, 31).unwrap(),
        };
        let url = expand_template("https://h/{ticker}?a={start}&b={end}&p={start_ts}", "AAPL", range);
        assert_eq!(url, "https://h/AAPL?a=2013-11-01&b=2024-10-31&p=1383264000");
    }
}
