//! TCP transport: one JSON request per line, one JSON response per line.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;

use super::Service;
use crate::error::{Error, Result};

/// Accepts connections until the listener fails, one thread per connection.
pub fn serve(service: Arc<Service>, listener: TcpListener) -> Result<()> {
    let addr = listener.local_addr().map_err(|e| Error::io("listener", e))?;
    log::info!("serving {} bundle(s) on {addr}", service.bundle_ids().len());
    for stream in listener.incoming() {
        let stream = stream.map_err(|e| Error::io(addr.to_string(), e))?;
        let service = Arc::clone(&service);
        thread::spawn(move || {
            let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
            if let Err(e) = connection(&service, stream) {
                log::warn!("connection {peer}: {e}");
            }
        });
    }
    Ok(())
}

fn connection(service: &Service, stream: TcpStream) -> std::io::Result<()> {
    let mut writer = stream.try_clone()?;
    for line in BufReader::new(stream).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut out = service.handle_line(&line);
        out.push('\n');
        writer.write_all(out.as_bytes())?;
        writer.flush()?;
    }
    Ok(())
}
