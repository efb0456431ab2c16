//! HTTP service with the simulator endpoints and event stream.
//!
//! `cargo run --release --example serve -- 8080 [static-dir]`, then e.g.
//!
//! ```text
//! curl -X POST localhost:8080/sessions -d '{"source":{"path":"room.hlc1"}}' -H 'content-type: application/json'
//! curl -N localhost:8080/sessions/s1/events
//! ```

use std::net::SocketAddr;
use std::path::PathBuf;

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let port: u16 = args.next().and_then(|p| p.parse().ok()).unwrap_or(8080);
    let static_dir = args.next().map(PathBuf::from);
    hida::service::serve(SocketAddr::from(([127, 0, 0, 1], port)), static_dir).await
}
