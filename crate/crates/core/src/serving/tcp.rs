use std::io::{self, BufRead, BufReader, ErrorKind, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use crate::error::{Error, Result};

use super::{process_line, LineOutcome, StreamState};

const POLL_INTERVAL: Duration = Duration::from_millis(20);
const READ_TIMEOUT: Duration = Duration::from_millis(100);

/// Requests a running [`Server`] to stop accepting and wind down.
#[derive(Debug, Clone)]
pub struct ShutdownHandle(Arc<AtomicBool>);

impl ShutdownHandle {
    pub fn shutdown(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_shutdown(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

/// Line-delimited JSON scoring over TCP. Every connection has the stdin
/// loop's per-line contract; scored events and error objects both go back
/// on the connection. All connections share one [`StreamState`].
pub struct Server {
    listener: TcpListener,
    state: Arc<StreamState>,
    shutdown: ShutdownHandle,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, state: Arc<StreamState>) -> Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        Ok(Self {
            listener,
            state,
            shutdown: ShutdownHandle(Arc::new(AtomicBool::new(false))),
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    pub fn shutdown_handle(&self) -> ShutdownHandle {
        self.shutdown.clone()
    }

    /// Accepts connections until shutdown, then waits for every connection
    /// to answer the lines it has already received.
    pub fn run(self) -> Result<()> {
        let mut workers: Vec<JoinHandle<()>> = Vec::new();
        while !self.shutdown.is_shutdown() {
            match self.listener.accept() {
                Ok((stream, peer)) => {
                    let state = Arc::clone(&self.state);
                    let shutdown = self.shutdown.clone();
                    workers.push(thread::spawn(move || {
                        if let Err(e) = serve_connection(stream, &state, &shutdown) {
                            log::debug!("connection {peer} closed: {e}");
                        }
                    }));
                    workers.retain(|w| !w.is_finished());
                }
                Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(POLL_INTERVAL),
                Err(e) => return Err(Error::Stream(e)),
            }
        }
        for w in workers {
            let _ = w.join();
        }
        Ok(())
    }
}

fn serve_connection(
    stream: TcpStream,
    state: &StreamState,
    shutdown: &ShutdownHandle,
) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(READ_TIMEOUT))?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut buf = Vec::new();
    let mut line_no = 0u64;
    loop {
        match reader.read_until(b'\n', &mut buf) {
            // EOF; a trailing partial line is dropped.
            Ok(0) => return Ok(()),
            Ok(_) if buf.last() != Some(&b'\n') => return Ok(()),
            Ok(_) => {
                line_no += 1;
                let line = String::from_utf8_lossy(&buf);
                let reply = match process_line(state, line.trim_end(), line_no) {
                    LineOutcome::Event(ev) => Some(ev.to_json_line()),
                    LineOutcome::Rejected(msg) => Some(msg),
                    LineOutcome::Blank => None,
                };
                buf.clear();
                if let Some(reply) = reply {
                    writer.write_all(reply.as_bytes())?;
                    writer.write_all(b"\n")?;
                    writer.flush()?;
                }
            }
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                if shutdown.is_shutdown() && buf.is_empty() {
                    return Ok(());
                }
            }
            Err(e) => return Err(e),
        }
    }
}
