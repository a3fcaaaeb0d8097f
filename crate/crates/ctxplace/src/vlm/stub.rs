//! Local chat-completions endpoint that replays canned replies, for running
//! the VLM path offline.

use std::collections::VecDeque;
use std::net::SocketAddr;
use std::thread::JoinHandle;

use serde_json::json;
use tiny_http::{Header, Method, Response, Server};

use super::transcript::Entry;
use super::VlmError;

/// Wraps a reply the way a chat-completions endpoint would.
pub fn completion_body(reply: &str) -> String {
    json!({
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": reply}, "finish_reason": "stop"}],
    })
    .to_string()
}

pub struct StubServer {
    server: Server,
    replies: VecDeque<String>,
}

impl StubServer {
    /// Binds `addr` (port 0 picks a free port). Replies are the transcript
    /// entries' responses in order.
    pub fn bind(addr: &str, entries: Vec<Entry>) -> Result<Self, VlmError> {
        let server = Server::http(addr).map_err(|e| VlmError::Transport(format!("cannot bind {addr}: {e}")))?;
        Ok(StubServer {
            server,
            replies: entries.into_iter().filter_map(|e| e.response).collect(),
        })
    }

    pub fn local_addr(&self) -> Option<SocketAddr> {
        self.server.server_addr().to_ip()
    }

    /// Serves until every reply has been handed out. Requests other than
    /// `POST` get 405 and do not consume a reply.
    pub fn serve(mut self) -> Result<usize, VlmError> {
        let mut served = 0;
        while !self.replies.is_empty() {
            let mut req = self.server.recv().map_err(|e| VlmError::Transport(e.to_string()))?;
            let mut sink = Vec::new();
            let _ = std::io::Read::read_to_end(req.as_reader(), &mut sink);
            let json_header = Header::from_bytes("Content-Type", "application/json").expect("static header");
            let response = if *req.method() != Method::Post {
                Response::from_string("{\"error\":\"POST only\"}").with_status_code(405)
            } else {
                let reply = self.replies.pop_front().expect("loop guard");
                served += 1;
                Response::from_string(completion_body(&reply))
            };
            req.respond(response.with_header(json_header))
                .map_err(|e| VlmError::Transport(e.to_string()))?;
        }
        Ok(served)
    }

    /// Serves on a background thread; returns the bound address.
    pub fn spawn(self) -> (Option<SocketAddr>, JoinHandle<Result<usize, VlmError>>) {
        let addr = self.local_addr();
        (addr, std::thread::spawn(move || self.serve()))
    }
}
