use std::io::Write as _;

use serde_json::json;
use vmd_server::ServerConfig;

use super::{resolve_model_path, Ctx};
use crate::args::ServeArgs;
use crate::config_file::pick;

fn server_config(args: &ServeArgs, ctx: &Ctx) -> anyhow::Result<ServerConfig> {
    let mut config = ServerConfig::new(resolve_model_path(&args.model, &ctx.file)?);
    let serve = &ctx.file.serve;
    config.listen_addr = pick(args.listen, serve.listen, config.listen_addr);
    config.port = pick(args.port, serve.port, config.port);
    config.default_window_ms = pick(args.window, ctx.file.window_ms, config.default_window_ms);
    config.default_tau = pick(args.tau, ctx.file.tau, config.default_tau);
    config.pool_size = pick(args.pool_size, serve.pool_size, config.pool_size);
    config.max_sessions = pick(args.max_sessions, serve.max_sessions, config.max_sessions);
    config.idle_timeout_ms = pick(
        args.idle_timeout_ms,
        serve.idle_timeout_ms,
        config.idle_timeout_ms,
    );
    config.validate()?;
    Ok(config)
}

/// Runs until ctrl-c. The listening line goes to stdout immediately so
/// wrappers can scrape the bound address; logs go to stderr.
pub fn run(args: &ServeArgs, ctx: &Ctx) -> anyhow::Result<String> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let config = server_config(args, ctx)?;

    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let handle = vmd_server::serve(config).await?;
        let addr = handle.local_addr();
        let line = if ctx.json {
            serde_json::to_string(&json!({
                "v": 1,
                "kind": "serve",
                "addr": addr.to_string(),
                "ws": format!("ws://{addr}/ws"),
                "healthz": format!("http://{addr}/healthz"),
                "stats": format!("http://{addr}/stats"),
            }))?
        } else {
            format!("listening on ws://{addr}/ws (stats http://{addr}/stats)")
        };
        println!("{line}");
        std::io::stdout().flush()?;

        tokio::signal::ctrl_c().await?;
        handle.shutdown().await;
        Ok::<_, anyhow::Error>(())
    })?;
    Ok(String::new())
}
