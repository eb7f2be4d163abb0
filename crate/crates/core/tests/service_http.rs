mod common;

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use vbokeh::io::{self, BitDepth, DisparityFormat};
use vbokeh::service::{self, ServiceConfig, ServiceHandle};
use vbokeh::{DisparityMap, Frame, VideoClip};

const W: usize = 64;
const H: usize = 48;

struct Reply {
    status: u16,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|_| panic!("not json: {}", String::from_utf8_lossy(&self.body)))
    }
}

fn request(addr: SocketAddr, method: &str, path: &str, body: Option<&[u8]>) -> Reply {
    let mut stream = TcpStream::connect(addr).unwrap();
    stream.set_read_timeout(Some(Duration::from_secs(30))).unwrap();
    let body = body.unwrap_or_default();
    let head = format!(
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n",
        body.len()
    );
    stream.write_all(head.as_bytes()).unwrap();
    let _ = stream.write_all(body);
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).unwrap();
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").expect("header terminator");
    let head = String::from_utf8_lossy(&raw[..split]).to_ascii_lowercase();
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    let mut payload = raw[split + 4..].to_vec();
    if head.contains("transfer-encoding: chunked") {
        payload = dechunk(&payload);
    }
    Reply { status, body: payload }
}

fn dechunk(mut data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    loop {
        let line_end = data.windows(2).position(|w| w == b"\r\n").unwrap();
        let size = usize::from_str_radix(std::str::from_utf8(&data[..line_end]).unwrap().trim(), 16).unwrap();
        if size == 0 {
            return out;
        }
        out.extend_from_slice(&data[line_end + 2..line_end + 2 + size]);
        data = &data[line_end + 4 + size..];
    }
}

fn get(addr: SocketAddr, path: &str) -> Reply {
    request(addr, "GET", path, None)
}

fn post(addr: SocketAddr, path: &str, body: &Value) -> Reply {
    request(addr, "POST", path, Some(body.to_string().as_bytes()))
}

/// Flat-disparity square at 0.8 over a tilted background around 0.2.
fn write_clip(root: &Path, frames: usize) -> (PathBuf, PathBuf) {
    write_clip_sized(root, frames, W, H)
}

fn write_clip_sized(root: &Path, frames: usize, w: usize, h: usize) -> (PathBuf, PathBuf) {
    let frame_list: Vec<Frame> = (0..frames).map(|t| common::random_frame(w, h, 40 + t as u64)).collect();
    let disp: Vec<DisparityMap> = (0..frames)
        .map(|_| {
            DisparityMap::from_fn(w, h, |x, y| {
                let inside = (w / 4..3 * w / 4).contains(&x) && (h / 4..3 * h / 4).contains(&y);
                if inside { 0.8 } else { 0.15 + 0.1 * x as f32 / w as f32 }
            })
            .unwrap()
        })
        .collect();
    let (fdir, ddir) = (root.join("frames"), root.join("disp"));
    io::save_frame_sequence(&VideoClip::from_frames(frame_list).unwrap(), &fdir, BitDepth::Eight).unwrap();
    io::save_disparity_sequence(&disp, &ddir, DisparityFormat::Pfm).unwrap();
    (fdir, ddir)
}

fn start(config: ServiceConfig) -> ServiceHandle {
    service::spawn(ServiceConfig { port: 0, ..config }).unwrap()
}

fn register(addr: SocketAddr, frames: &Path, disp: &Path) -> Reply {
    post(addr, "/clips", &json!({ "frames": frames, "disparity": disp }))
}

fn wait_for_job(addr: SocketAddr, job: &str) -> Value {
    let deadline = Instant::now() + Duration::from_secs(60);
    loop {
        let status = get(addr, &format!("/jobs/{job}")).json();
        if status["state"] == "done" || status["state"] == "failed" || Instant::now() > deadline {
            return status;
        }
        std::thread::sleep(Duration::from_millis(20));
    }
}

fn decode(bytes: &[u8]) -> Frame {
    io::decode_frame_png(bytes, Path::new("response.png")).unwrap()
}

#[test]
fn health_and_registration() {
    let dir = tempfile::tempdir().unwrap();
    let (f, d) = write_clip(dir.path(), 3);
    let server = start(ServiceConfig::default());
    let addr = server.addr();
    let health = get(addr, "/healthz");
    assert_eq!((health.status, health.body.as_slice()), (200, b"ok".as_slice()));

    let a = register(addr, &f, &d);
    assert_eq!(a.status, 201);
    let session = a.json();
    assert_eq!(session["frames"], 3);
    assert_eq!((session["width"].as_u64(), session["height"].as_u64()), (Some(W as u64), Some(H as u64)));
    assert!((session["disparity_max"].as_f64().unwrap() - 0.8).abs() < 1e-6);
    let b = register(addr, &f, &d).json();
    assert_ne!(session["clip_id"], b["clip_id"]);

    // Mismatched sequence lengths.
    let short = dir.path().join("short");
    std::fs::create_dir(&short).unwrap();
    std::fs::copy(io::list_sequence(&d).unwrap()[0].clone(), short.join("000000.pfm")).unwrap();
    assert_eq!(register(addr, &f, &short).status, 400);
    assert_eq!(register(addr, &f, &dir.path().join("missing")).status, 400);
    assert_eq!(request(addr, "POST", "/clips", Some(b"{not json")).status, 400);
    let huge = json!({ "frames": "x".repeat(200_000), "disparity": "y" });
    assert_eq!(post(addr, "/clips", &huge).status, 413);
}

#[test]
fn frame_endpoint_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let (f, d) = write_clip(dir.path(), 2);
    let server = start(ServiceConfig::default());
    let addr = server.addr();
    let id = register(addr, &f, &d).json()["clip_id"].as_str().unwrap().to_string();

    let rgb = get(addr, &format!("/clips/{id}/frame/1"));
    assert_eq!(rgb.status, 200);
    let on_disk = std::fs::read(io::list_sequence(&f).unwrap()[1].clone()).unwrap();
    assert_eq!(decode(&rgb.body), decode(&on_disk));

    let mask = get(addr, &format!("/clips/{id}/frame/0?kind=mask&focus=0.8&layers=8&layer=8"));
    assert_eq!(mask.status, 200);
    let png = io::decode_png(&mask.body, Path::new("mask.png")).unwrap();
    assert!(png.samples.iter().all(|&s| s == png.samples[0]) && png.samples[0] > 0);

    let vd = get(addr, &format!("/clips/{id}/frame/0?kind=vd&focus=0.8"));
    let png = io::decode_png(&vd.body, Path::new("vd.png")).unwrap();
    assert_eq!(png.samples[20 * W + 30], 0);
    assert!(png.samples[2 * W + 2] > 0);

    let disp = get(addr, &format!("/clips/{id}/frame/0?kind=disparity&scale=0.5"));
    let png = io::decode_png(&disp.body, Path::new("d.png")).unwrap();
    assert_eq!((png.width, png.height), (W / 2, H / 2));

    assert_eq!(get(addr, &format!("/clips/{id}/frame/2")).status, 404);
    assert_eq!(get(addr, "/clips/nope/frame/0").status, 404);
    assert_eq!(get(addr, &format!("/clips/{id}/frame/0?kind=vd")).status, 400);
    assert_eq!(get(addr, &format!("/clips/{id}/frame/0?kind=mask&focus=0.5&layers=4")).status, 400);
    assert_eq!(get(addr, &format!("/clips/{id}/frame/0?kind=bogus")).status, 400);
}

#[test]
fn inline_previews() {
    let dir = tempfile::tempdir().unwrap();
    let (f, d) = write_clip(dir.path(), 2);
    let server = start(ServiceConfig::default());
    let addr = server.addr();
    let id = register(addr, &f, &d).json()["clip_id"].as_str().unwrap().to_string();
    let render = |body: Value| post(addr, &format!("/clips/{id}/render"), &body);

    // Zero strength: byte-identical to the downscaled colour frame.
    let preview = render(json!({ "focus_disparity": 0.5, "K": 0, "frames": { "start": 1, "end": 2 }, "preview_scale": 0.5 }));
    assert_eq!(preview.status, 200);
    let rgb = get(addr, &format!("/clips/{id}/frame/1?scale=0.5"));
    assert_eq!(preview.body, rgb.body);

    // Focus on the square: its interior stays sharp while the background blurs.
    let preview = render(json!({ "focus_px": { "x": 32, "y": 24, "t": 0 }, "K": 20, "frames": { "start": 0, "end": 1 }, "preview_scale": 0.5 }));
    assert_eq!(preview.status, 200);
    let (out, rgb) = (decode(&preview.body), decode(&get(addr, &format!("/clips/{id}/frame/0?scale=0.5")).body));
    for y in 10..14 {
        for x in 14..18 {
            let (a, b) = (out.pixel(x, y), rgb.pixel(x, y));
            for c in 0..3 {
                let diff = (io::linear_to_srgb(a[c]) - io::linear_to_srgb(b[c])).abs();
                assert!(diff <= 2.0 / 255.0, "({x},{y}) differs by {diff}");
            }
        }
    }
    assert!(out.pixel(1, 1) != rgb.pixel(1, 1));

    assert_eq!(render(json!({ "focus_disparity": 0.5, "K": 4, "renderer": "raytrace" })).status, 400);
    assert_eq!(render(json!({ "K": 4 })).status, 400);
    assert_eq!(render(json!({ "focus_disparity": 0.5, "focus_px": { "x": 0, "y": 0, "t": 0 }, "K": 4 })).status, 400);
    assert_eq!(render(json!({ "focus_disparity": 0.5, "K": 4, "frames": { "start": 1, "end": 1 } })).status, 400);
    assert_eq!(render(json!({ "focus_px": { "x": 99, "y": 0, "t": 0 }, "K": 4 })).status, 400);
    assert_eq!(post(addr, "/clips/none/render", &json!({ "focus_disparity": 0.5, "K": 1 })).status, 404);
}

#[test]
fn background_job_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let (f, d) = write_clip(dir.path(), 25);
    let server = start(ServiceConfig::default());
    let addr = server.addr();
    let id = register(addr, &f, &d).json()["clip_id"].as_str().unwrap().to_string();
    let reply = post(addr, &format!("/clips/{id}/render"), &json!({ "focus_disparity": 0.8, "K": 12, "N": 8 }));
    assert_eq!(reply.status, 202);
    let job = reply.json()["job_id"].as_str().unwrap().to_string();
    assert_eq!(reply.json()["frames"], 25);
    let status = wait_for_job(addr, &job);
    assert_eq!(status["state"], "done", "{status}");
    assert_eq!(status["progress"], 25);
    assert_eq!(status["total"], 25);
    for t in [0, 12, 24] {
        let r = get(addr, &format!("/jobs/{job}/result/{t}"));
        assert_eq!(r.status, 200);
        assert_eq!(decode(&r.body).dims(), (W, H));
    }
    assert_eq!(get(addr, &format!("/jobs/{job}/result/25")).status, 404);
    assert_eq!(get(addr, "/jobs/none").status, 404);

    assert_eq!(get(addr, &format!("/jobs/{job}/result/0")).status, 200);
}

#[test]
fn unrendered_frames_are_not_ready() {
    let dir = tempfile::tempdir().unwrap();
    let (f, d) = write_clip_sized(dir.path(), 12, 512, 288);
    let server = start(ServiceConfig::default());
    let addr = server.addr();
    let id = register(addr, &f, &d).json()["clip_id"].as_str().unwrap().to_string();
    let reply = post(addr, &format!("/clips/{id}/render"), &json!({ "focus_disparity": 0.8, "K": 30, "frames": { "start": 2, "end": 12 } }));
    assert_eq!(reply.status, 202);
    let job = reply.json()["job_id"].as_str().unwrap().to_string();
    assert_eq!(get(addr, &format!("/jobs/{job}/result/11")).status, 425);
    assert_eq!(get(addr, &format!("/jobs/{job}/result/0")).status, 404);
    let status = wait_for_job(addr, &job);
    assert_eq!((status["state"].as_str(), status["progress"].as_u64()), (Some("done"), Some(10)));
    assert_eq!(get(addr, &format!("/jobs/{job}/result/11")).status, 200);
}

#[test]
fn corrupt_frame_fails_job() {
    let dir = tempfile::tempdir().unwrap();
    let (f, d) = write_clip(dir.path(), 3);
    let server = start(ServiceConfig::default());
    let addr = server.addr();
    let id = register(addr, &f, &d).json()["clip_id"].as_str().unwrap().to_string();
    std::fs::write(io::list_sequence(&f).unwrap()[1].clone(), b"not a png").unwrap();
    let reply = post(addr, &format!("/clips/{id}/render"), &json!({ "focus_disparity": 0.5, "K": 4 }));
    let job = reply.json()["job_id"].as_str().unwrap().to_string();
    let status = wait_for_job(addr, &job);
    assert_eq!(status["state"], "failed");
    assert!(status["message"].as_str().unwrap().contains("frame 1"));
    assert_eq!(status["progress"], 1);
    assert_eq!(get(addr, &format!("/jobs/{job}/result/0")).status, 200);
    assert_eq!(get(addr, &format!("/jobs/{job}/result/1")).status, 500);
}

#[test]
fn bounded_queue_refuses_excess_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let (f, d) = write_clip(dir.path(), 25);
    let server = start(ServiceConfig { queue_capacity: 1, ..ServiceConfig::default() });
    let addr = server.addr();
    let id = register(addr, &f, &d).json()["clip_id"].as_str().unwrap().to_string();
    let codes: Vec<u16> = (0..6)
        .map(|_| post(addr, &format!("/clips/{id}/render"), &json!({ "focus_disparity": 0.2, "K": 30, "N": 32 })).status)
        .collect();
    assert_eq!(codes[0], 202);
    assert!(codes.contains(&409), "{codes:?}");
    assert!(codes.iter().all(|&c| c == 202 || c == 409));
}

#[test]
fn frame_cache_stays_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let (f, d) = write_clip(dir.path(), 8);
    let server = start(ServiceConfig { cache_frames: 4, ..ServiceConfig::default() });
    let addr = server.addr();
    let id = register(addr, &f, &d).json()["clip_id"].as_str().unwrap().to_string();
    for t in 0..8 {
        assert_eq!(get(addr, &format!("/clips/{id}/frame/{t}")).status, 200);
    }
    get(addr, &format!("/clips/{id}/frame/7"));
    let stats = get(addr, "/stats").json();
    assert_eq!(stats["cache_capacity"], 4);
    assert!(stats["cache_len"].as_u64().unwrap() <= 4);
    assert!(stats["cache_hits"].as_u64().unwrap() >= 1);
    assert!(stats["cache_misses"].as_u64().unwrap() >= 8);
}
