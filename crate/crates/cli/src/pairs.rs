//! Control pairs from the command line (`u,v=x,y`) or a CSV file.

use std::path::Path;
use std::str::FromStr;

use cartometry::Error;
use cartometry_service::api::PairSpec;

/// An inline `u,v=x,y` pair. With `--geo` the right-hand side is `lat,lon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InlinePair {
    pub pixel: [f64; 2],
    pub target: [f64; 2],
}

fn two_numbers(s: &str) -> Option<[f64; 2]> {
    let (a, b) = s.split_once(',')?;
    Some([a.trim().parse().ok()?, b.trim().parse().ok()?])
}

impl FromStr for InlinePair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected \"u,v=x,y\", got {s:?}");
        let (lhs, rhs) = s.split_once('=').ok_or_else(bad)?;
        Ok(Self {
            pixel: two_numbers(lhs).ok_or_else(bad)?,
            target: two_numbers(rhs).ok_or_else(bad)?,
        })
    }
}

impl InlinePair {
    pub fn to_spec(self, index: usize, geo: bool) -> PairSpec {
        PairSpec {
            label: format!("pair {}", index + 1),
            pixel: self.pixel,
            world: (!geo).then_some(self.target),
            geo: geo.then_some(self.target),
        }
    }
}

fn csv_error(path: &Path, line: Option<u64>, column: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        path: format!("{}:{column}", path.display()),
        line: line.map(|l| l as usize),
        column: None,
        message: message.into(),
    }
}

/// Reads a pairs CSV with header `u,v,x,y` or `u,v,lat,lon`, plus an
/// optional `label` column.
pub fn read_pairs_file(path: &Path) -> Result<Vec<PairSpec>, Error> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| csv_error(path, Some(1), "header", e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (u, v) = match (col("u"), col("v")) {
        (Some(u), Some(v)) => (u, v),
        _ => return Err(csv_error(path, Some(1), "header", "missing u,v columns")),
    };
    let (a, b, geo) = match (col("x"), col("y"), col("lat"), col("lon")) {
        (Some(x), Some(y), None, None) => (x, y, false),
        (None, None, Some(lat), Some(lon)) => (lat, lon, true),
        _ => {
            return Err(csv_error(path, Some(1), "header", "expected either x,y or lat,lon columns"));
        }
    };
    let label = col("label");
    let names = ["u", "v", if geo { "lat" } else { "x" }, if geo { "lon" } else { "y" }];

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line());
            csv_error(path, line, "record", e.to_string())
        })?;
        let line = record.position().map(|p| p.line());
        let mut nums = [0.0; 4];
        for (slot, (idx, name)) in nums.iter_mut().zip([u, v, a, b].into_iter().zip(names)) {
            let raw = record.get(idx).unwrap_or("");
            *slot = raw
                .parse()
                .map_err(|_| csv_error(path, line, name, format!("{raw:?} is not a number")))?;
        }
        let target = [nums[2], nums[3]];
        out.push(PairSpec {
            label: label
                .and_then(|i| record.get(i))
                .map_or_else(|| format!("pair {}", out.len() + 1), str::to_string),
            pixel: [nums[0], nums[1]],
            world: (!geo).then_some(target),
            geo: geo.then_some(target),
        });
    }
    Ok(out)
}
