//! NDJSON transports: one request object per line in, one response per line
//! out. Standard input/output carries a single session; each TCP connection
//! is its own session.

use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use matchday_core::protocol::Session;
use matchday_core::{Dataset, LineConfig, ScenarioRegistry, ScenarioSpec};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::TcpListener;

use crate::args::{ServeArgs, Transport};
use crate::{line_config, load_data, load_registry, CliError};

/// Everything needed to open a session.
#[derive(Debug)]
pub struct SessionFactory {
    pub data: Arc<Dataset>,
    pub registry: ScenarioRegistry,
    pub default_scenario: ScenarioSpec,
    pub line: LineConfig,
    pub label: String,
    pub drop_dir: Option<PathBuf>,
    pub log_dir: Option<PathBuf>,
    next_id: AtomicU64,
}

impl SessionFactory {
    pub fn new(
        data: Arc<Dataset>,
        registry: ScenarioRegistry,
        default_scenario: &str,
        line: LineConfig,
        label: impl Into<String>,
    ) -> Result<Self, CliError> {
        let default_scenario = registry.get(default_scenario)?.clone();
        Ok(SessionFactory {
            data,
            registry,
            default_scenario,
            line,
            label: label.into(),
            drop_dir: None,
            log_dir: None,
            next_id: AtomicU64::new(1),
        })
    }

    pub fn from_args(a: &ServeArgs) -> Result<Self, CliError> {
        let registry = load_registry(a.data.registry.as_deref(), &a.data.data)?;
        let line = line_config(&a.data.line, a.data.books.as_deref())?;
        let data = Arc::new(load_data(&a.data.data)?);
        let mut f = SessionFactory::new(data, registry, &a.scenario, line, a.label.clone())?;
        f.drop_dir = a.drop_dir.clone();
        f.log_dir = a.log_dir.clone();
        Ok(f)
    }

    /// Opens a session on `scenario` (the default when absent). The id is
    /// unique within this factory.
    pub fn open(&self, scenario: Option<&str>, label: Option<&str>) -> Result<(u64, Session), CliError> {
        let spec = match scenario {
            Some(name) => self.registry.get(name)?.clone(),
            None => self.default_scenario.clone(),
        };
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let label = label.unwrap_or(&self.label);
        let mut session = Session::new(spec, self.data.clone(), self.line.clone(), label)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(dir) = &self.drop_dir {
            session = session.with_drop_dir(dir.join(format!("session-{id}")));
        }
        Ok((id, session))
    }

    /// Writes the session's run log into the log directory, if configured.
    pub fn finish(&self, id: u64, session: &Session) {
        let Some(dir) = &self.log_dir else { return };
        let path = dir.join(format!("session-{id}.ndjson"));
        let result = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, session.log_ndjson()));
        match result {
            Ok(()) => log::info!("session {id}: run log written to {}", path.display()),
            Err(e) => log::error!("session {id}: cannot write {}: {e}", path.display()),
        }
    }
}

pub fn run(a: ServeArgs) -> Result<ExitCode, CliError> {
    let factory = Arc::new(SessionFactory::from_args(&a)?);
    match a.transport {
        Transport::Stdio => {
            let stdin = std::io::stdin();
            let stdout = std::io::stdout();
            serve_lines(&factory, stdin.lock(), stdout.lock())?;
            Ok(ExitCode::SUCCESS)
        }
        Transport::Tcp | Transport::Http => {
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
            rt.block_on(async move {
                let listener = TcpListener::bind(a.listen)
                    .await
                    .map_err(|e| CliError::Runtime(format!("bind {}: {e}", a.listen)))?;
                eprintln!("listening on {} ({:?})", listener.local_addr().map_err(|e| CliError::Runtime(e.to_string()))?, a.transport);
                if a.transport == Transport::Tcp {
                    serve_tcp(factory, listener).await
                } else {
                    axum::serve(listener, crate::http::router(factory))
                        .with_graceful_shutdown(async {
                            let _ = tokio::signal::ctrl_c().await;
                        })
                        .await
                        .map_err(|e| CliError::Runtime(e.to_string()))
                }
            })?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Runs one session over a line-oriented reader and writer until the input
/// ends. Blank lines are ignored.
pub fn serve_lines<R: BufRead, W: Write>(factory: &SessionFactory, input: R, mut output: W) -> Result<(), CliError> {
    let (id, mut session) = factory.open(None, None)?;
    let io = |e: std::io::Error| CliError::Runtime(e.to_string());
    for line in input.lines() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let response = session.handle_line(&line);
        writeln!(output, "{}", response.to_line()).map_err(io)?;
        output.flush().map_err(io)?;
    }
    factory.finish(id, &session);
    Ok(())
}

pub async fn serve_tcp(factory: Arc<SessionFactory>, listener: TcpListener) -> Result<(), CliError> {
    loop {
        let (stream, peer) = listener.accept().await.map_err(|e| CliError::Runtime(e.to_string()))?;
        let factory = factory.clone();
        tokio::spawn(async move {
            let (id, mut session) = match factory.open(None, None) {
                Ok(s) => s,
                Err(e) => {
                    log::error!("{peer}: {e}");
                    return;
                }
            };
            log::info!("{peer}: session {id} opened");
            let (read, mut write) = stream.into_split();
            let mut lines = BufReader::new(read).lines();
            // requests on one connection are handled strictly in order
            while let Ok(Some(line)) = lines.next_line().await {
                if line.trim().is_empty() {
                    continue;
                }
                let mut out = session.handle_line(&line).to_line();
                out.push('\n');
                if write.write_all(out.as_bytes()).await.is_err() {
                    break;
                }
            }
            factory.finish(id, &session);
            log::info!("{peer}: session {id} closed");
        });
    }
}
