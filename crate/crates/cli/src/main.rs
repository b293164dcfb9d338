//! `cartometry`: calibrate map sessions, measure features, fit boundaries and
//! serve the REST API.
//!
//! Exit status: 0 success, 1 usage error, 2 schema or IO error, 3 domain error.

mod pairs;
mod text;

use std::io::Write;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use cartometry::calibration::TransformKind;
use cartometry::session::{load_session, save_session, DisplayUnit, FeatureKind, ImageRef, Projection, Session};
use cartometry::{Error, ErrorClass, Result};
use cartometry_service::api::{self, CalibrateRequest, FitRequest, NewFeatureRequest, PointRequest};
use clap::{Parser, Subcommand};

use pairs::InlinePair;

#[derive(Parser)]
#[command(name = "cartometry", version, about = "Measure distances and areas on calibrated map images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Create a new, uncalibrated session file.
    Init {
        session: PathBuf,
        /// Path of the map image, stored as given.
        #[arg(long)]
        image: String,
        #[arg(long)]
        width: u32,
        #[arg(long)]
        height: u32,
        #[arg(long, default_value = "web_mercator", value_parser = parse::<Projection>)]
        projection: Projection,
        #[arg(long, default_value = "km", value_parser = parse::<DisplayUnit>)]
        unit: DisplayUnit,
    },
    /// Add an empty route or region.
    AddFeature {
        session: PathBuf,
        id: String,
        #[arg(long, value_parser = parse::<FeatureKind>)]
        kind: FeatureKind,
        #[arg(long, default_value = "")]
        name: String,
        #[arg(long)]
        json: bool,
    },
    /// Append traced pixel points ("u,v") to a feature. Put negative
    /// coordinates after `--`.
    AddPoint {
        session: PathBuf,
        id: String,
        #[arg(required = true, value_parser = parse_point)]
        points: Vec<PointRequest>,
        #[arg(long)]
        json: bool,
    },
    /// Change the display unit (m, km, mi).
    SetUnit {
        session: PathBuf,
        #[arg(value_parser = parse::<DisplayUnit>)]
        unit: DisplayUnit,
    },
    /// Fit the pixel-to-world transform from control pairs.
    Calibrate {
        session: PathBuf,
        /// Control pair "u,v=x,y" (km), or "u,v=lat,lon" with --geo.
        #[arg(long = "pair", allow_hyphen_values = true)]
        pairs: Vec<InlinePair>,
        /// CSV with header u,v,x,y or u,v,lat,lon and an optional label column.
        #[arg(long)]
        pairs_file: Option<PathBuf>,
        /// Read inline pair targets as latitude, longitude.
        #[arg(long)]
        geo: bool,
        #[arg(long, default_value = "similarity", value_parser = parse::<TransformKind>)]
        kind: TransformKind,
        #[arg(long)]
        json: bool,
    },
    /// Measure a route length or region area.
    Measure {
        session: PathBuf,
        id: String,
        #[arg(long, value_parser = parse::<DisplayUnit>)]
        unit: Option<DisplayUnit>,
        #[arg(long)]
        json: bool,
    },
    /// Fit a Fourier boundary to a region.
    Fit {
        session: PathBuf,
        id: String,
        /// Harmonic count; defaults to min(8, vertices/4).
        #[arg(long)]
        n: Option<usize>,
        /// Store the fitted curve, sampled at M points, as feature "<id>-fourier".
        #[arg(long, value_name = "M")]
        emit_samples: Option<usize>,
        /// Print "n,rms,area" CSV for n = 1..N_MAX instead of a single fit.
        #[arg(long, value_name = "N_MAX", conflicts_with_all = ["n", "emit_samples", "json"])]
        error_curve: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Serve the REST API over a directory of session files.
    Serve {
        dir: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        bind: IpAddr,
        /// Directory of built UI assets served under /.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

fn parse_point(s: &str) -> std::result::Result<PointRequest, String> {
    let (u, v) = s.split_once(',').ok_or_else(|| format!("expected \"u,v\", got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("expected \"u,v\", got {s:?}"));
    Ok(PointRequest { u: num(u)?, v: num(v)? })
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", api::to_line(value));
}

fn warn(warnings: &[cartometry::session::Warning]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Init {
            session,
            image,
            width,
            height,
            projection,
            unit,
        } => {
            if session.exists() {
                return Err(Error::Io {
                    path: session,
                    source: std::io::Error::new(std::io::ErrorKind::AlreadyExists, "file already exists"),
                });
            }
            if width == 0 || height == 0 {
                return Err(Error::InvalidInput("image dimensions must be positive".into()));
            }
            let s = Session::new(ImageRef::new(image, width, height), projection).with_display_unit(unit);
            save_session(&s, &session)
        }
        Command::AddFeature {
            session,
            id,
            kind,
            name,
            json,
        } => {
            let s = load_session(&session)?;
            let (next, feature) = api::add_feature(&s, &NewFeatureRequest { id, kind, name })?;
            save_session(&next, &session)?;
            if json {
                print_json(&feature);
            }
            Ok(())
        }
        Command::AddPoint {
            session,
            id,
            points,
            json,
        } => {
            let mut s = load_session(&session)?;
            let mut warnings = Vec::new();
            let mut last = None;
            for p in points {
                let (next, update) = api::append_point(&s, &id, p)?;
                warnings.extend(update.warnings.iter().cloned());
                s = next;
                last = Some(update);
            }
            save_session(&s, &session)?;
            let mut update = last.expect("at least one point is required");
            update.warnings = warnings;
            if json {
                print_json(&update);
            } else {
                warn(&update.warnings);
                println!("{}: {} point(s)", update.id, update.points.len());
            }
            Ok(())
        }
        Command::SetUnit { session, unit } => {
            let s = load_session(&session)?;
            save_session(&s.with_display_unit(unit), &session)
        }
        Command::Calibrate {
            session,
            pairs,
            pairs_file,
            geo,
            kind,
            json,
        } => {
            let mut specs: Vec<_> = pairs.iter().enumerate().map(|(i, p)| p.to_spec(i, geo)).collect();
            if let Some(file) = pairs_file {
                specs.extend(pairs::read_pairs_file(&file)?);
            }
            let s = load_session(&session)?;
            let count = specs.len();
            let (next, summary) = api::calibrate(&s, &CalibrateRequest { pairs: specs, kind })?;
            save_session(&next, &session)?;
            if json {
                print_json(&summary);
            } else {
                warn(&summary.warnings);
                print!("{}", text::calibration(&summary, count));
            }
            Ok(())
        }
        Command::Measure {
            session,
            id,
            unit,
            json,
        } => {
            let s = load_session(&session)?;
            let report = api::measure(&s, &id, unit)?;
            if json {
                print_json(&report);
            } else {
                print!("{}", text::measurement(&report));
            }
            Ok(())
        }
        Command::Fit {
            session,
            id,
            n,
            emit_samples,
            error_curve,
            json,
        } => {
            let s = load_session(&session)?;
            if let Some(n_max) = error_curve {
                return print_error_curve(&s, &id, n_max);
            }
            let outcome = api::fit(&s, &id, FitRequest { n, samples: emit_samples })?;
            if let Some(samples) = &outcome.samples {
                let new_id = format!("{id}-fourier");
                let name = format!("Fourier fit of {id} (n={})", outcome.n);
                let next = s.add_world_region(&new_id, &name, samples)?;
                save_session(&next, &session)?;
            }
            if json {
                print_json(&outcome);
            } else {
                print!("{}", text::fit(&outcome));
                if emit_samples.is_some() {
                    println!("wrote feature {id}-fourier");
                }
            }
            Ok(())
        }
        Command::Serve {
            dir,
            port,
            bind,
            assets,
        } => serve(&dir, SocketAddr::new(bind, port), assets),
    }
}

fn print_error_curve(s: &Session, id: &str, n_max: usize) -> Result<()> {
    let curve = s.fit_error_curve(id, n_max)?;
    let stdout = std::io::stdout();
    let mut w = csv::Writer::from_writer(stdout.lock());
    let io = |e: csv::Error| Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e.into(),
    };
    w.write_record(["n", "rms", "area"]).map_err(io)?;
    for row in curve {
        w.write_record([row.n.to_string(), row.rms_error.to_string(), row.area.to_string()])
            .map_err(io)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn serve(dir: &Path, addr: SocketAddr, assets: Option<PathBuf>) -> Result<()> {
    let store = Arc::new(cartometry_service::SessionStore::open(dir)?);
    tracing_subscriber::fmt().with_writer(std::io::stderr).with_target(false).init();
    let io = |source| Error::Io {
        path: PathBuf::from(addr.to_string()),
        source,
    };
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(io)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(io)?;
        let local = listener.local_addr().map_err(io)?;
        println!("listening on http://{local}");
        let _ = std::io::stdout().flush();
        let app = cartometry_service::router(store, assets);
        cartometry_service::serve(listener, app, cartometry_service::shutdown_signal())
            .await
            .map_err(io)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            ExitCode::from(match e.class() {
                ErrorClass::Input => 2,
                ErrorClass::Domain => 3,
            })
        }
    }
}
