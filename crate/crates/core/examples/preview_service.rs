//! Starts the preview service on a free port, registers a clip, asks for an
//! inline preview and runs a background job to completion.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::time::Duration;

use serde_json::{json, Value};
use vbokeh::io::{self, BitDepth, DisparityFormat};
use vbokeh::service::{self, ServiceConfig};
use vbokeh::{DisparityMap, Frame, VideoClip};

fn call(addr: SocketAddr, method: &str, path: &str, body: Option<Value>) -> (u16, Vec<u8>) {
    let body = body.map(|b| b.to_string()).unwrap_or_default();
    let mut stream = TcpStream::connect(addr).expect("connect");
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    )
    .expect("send");
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).expect("read");
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").expect("headers");
    let status = String::from_utf8_lossy(&raw[9..12]).parse().expect("status");
    (status, raw[split + 4..].to_vec())
}

fn main() -> vbokeh::Result<()> {
    let dir = std::env::temp_dir().join("vbokeh-service");
    let frames: Vec<Frame> = (0..10)
        .map(|t| Frame::from_fn(160, 90, |x, y| [((x + 3 * t) % 20) as f32 / 20.0, (y % 15) as f32 / 15.0, 0.4]))
        .collect::<vbokeh::Result<_>>()?;
    let maps: Vec<DisparityMap> = (0..10)
        .map(|_| DisparityMap::from_fn(160, 90, |x, _| if (60..100).contains(&x) { 0.8 } else { 0.2 }))
        .collect::<vbokeh::Result<_>>()?;
    io::save_frame_sequence(&VideoClip::from_frames(frames)?, &dir.join("frames"), BitDepth::Eight)?;
    io::save_disparity_sequence(&maps, &dir.join("disparity"), DisparityFormat::Pfm)?;

    let server = service::spawn(ServiceConfig { port: 0, ..ServiceConfig::default() })?;
    let addr = server.addr();
    println!("service at {}", server.url());

    let (_, body) = call(addr, "POST", "/clips", Some(json!({ "frames": dir.join("frames"), "disparity": dir.join("disparity") })));
    let session: Value = serde_json::from_slice(&body).expect("json");
    let id = session["clip_id"].as_str().expect("clip id").to_string();
    println!("registered {session}");

    let (status, png) = call(
        addr,
        "POST",
        &format!("/clips/{id}/render"),
        Some(json!({ "focus_px": { "x": 80, "y": 45, "t": 0 }, "K": 16, "frames": { "start": 0, "end": 1 }, "preview_scale": 0.25 })),
    );
    println!("inline preview: HTTP {status}, {} PNG bytes", png.len());

    let (status, body) = call(addr, "POST", &format!("/clips/{id}/render"), Some(json!({ "focus_disparity": 0.2, "K": 16 })));
    let job: Value = serde_json::from_slice(&body).expect("json");
    println!("job accepted: HTTP {status} {job}");
    let job_id = job["job_id"].as_str().expect("job id");
    loop {
        let (_, body) = call(addr, "GET", &format!("/jobs/{job_id}"), None);
        let state: Value = serde_json::from_slice(&body).expect("json");
        println!("  {} {}/{}", state["state"], state["progress"], state["total"]);
        if state["state"] == "done" || state["state"] == "failed" {
            break;
        }
        std::thread::sleep(Duration::from_millis(50));
    }
    let (status, png) = call(addr, "GET", &format!("/jobs/{job_id}/result/9"), None);
    println!("last frame: HTTP {status}, {} PNG bytes", png.len());
    let (_, stats) = call(addr, "GET", "/stats", None);
    println!("stats {}", String::from_utf8_lossy(&stats));
    Ok(())
}
