//! HTTP preview service: clip registration, disparity inspection, inline
//! previews and background render jobs.
//!
//! Endpoints:
//! - `POST /clips` `{"frames": dir, "disparity": dir}` registers a clip
//! - `GET /clips/{id}/frame/{t}?kind=rgb|disparity|vd|mask&focus=&layer=&layers=&scale=`
//! - `POST /clips/{id}/render` renders inline (single frame, scale <= 0.5) or queues a job
//! - `GET /jobs/{id}` and `GET /jobs/{id}/result/{t}`
//! - `GET /healthz`, `GET /stats`

use std::collections::HashMap;
use std::net::SocketAddr;
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Body;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lru::LruCache;
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot};

use crate::error::{Error, Result};
use crate::io::{self, BitDepth};
use crate::model::{BokehParams, DisparityMap, FocalSpec, Frame};
use crate::{mpi, optics};

/// Largest preview scale served synchronously.
pub const INLINE_MAX_SCALE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub host: String,
    /// 0 picks a free port.
    pub port: u16,
    pub cache_frames: usize,
    pub queue_capacity: usize,
    pub worker_threads: Option<usize>,
    pub max_body_bytes: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            cache_frames: 64,
            queue_capacity: 8,
            worker_threads: None,
            max_body_bytes: 64 * 1024,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClipSession {
    pub clip_id: String,
    #[serde(skip)]
    frame_paths: Vec<PathBuf>,
    #[serde(skip)]
    disparity_paths: Vec<PathBuf>,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub disparity_min: f64,
    pub disparity_max: f64,
}

impl ClipSession {
    fn norm_constant(&self, focal: FocalSpec) -> f64 {
        optics::norm_constant_from_range(self.disparity_min, self.disparity_max, focal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum CacheKind {
    Rgb,
    Disparity,
}

#[derive(Clone)]
enum Cached {
    Rgb(Arc<Frame>),
    Disparity(Arc<DisparityMap>),
}

struct FrameCache {
    entries: LruCache<(String, CacheKind, usize), Cached>,
    hits: u64,
    misses: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

struct RenderJob {
    clip_id: String,
    params: BokehParams,
    start: usize,
    end: usize,
    scale: f64,
    state: JobState,
    message: Option<String>,
    results: Vec<Option<Arc<Vec<u8>>>>,
}

impl RenderJob {
    fn progress(&self) -> usize {
        self.results.iter().filter(|r| r.is_some()).count()
    }
}

struct AppState {
    config: ServiceConfig,
    clips: RwLock<HashMap<String, Arc<ClipSession>>>,
    jobs: Mutex<HashMap<String, RenderJob>>,
    cache: Mutex<FrameCache>,
    next_id: AtomicU64,
    queue: mpsc::Sender<String>,
    pool: rayon::ThreadPool,
}

type Shared = Arc<AppState>;

struct ApiError(StatusCode, String);

impl ApiError {
    fn bad_request(msg: impl Into<String>) -> Self {
        ApiError(StatusCode::BAD_REQUEST, msg.into())
    }

    fn not_found(msg: impl Into<String>) -> Self {
        ApiError(StatusCode::NOT_FOUND, msg.into())
    }

    fn internal(msg: impl Into<String>) -> Self {
        ApiError(StatusCode::INTERNAL_SERVER_ERROR, msg.into())
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError::bad_request(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

fn png_response(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], Body::from(bytes)).into_response()
}

fn json_body<T>(body: std::result::Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    match body {
        Ok(Json(v)) => Ok(v),
        Err(r) if r.status() == StatusCode::PAYLOAD_TOO_LARGE => {
            Err(ApiError(StatusCode::PAYLOAD_TOO_LARGE, r.body_text()))
        }
        Err(r) => Err(ApiError::bad_request(r.body_text())),
    }
}

/// Box-filter downscale to `width` x `height`.
pub fn downscale_frame(frame: &Frame, width: usize, height: usize) -> Result<Frame> {
    let (w, h) = frame.dims();
    if (w, h) == (width, height) {
        return Ok(frame.clone());
    }
    let data = box_resample(w, h, width, height, 3, frame.data());
    Frame::new(width, height, data)
}

pub fn downscale_disparity(map: &DisparityMap, width: usize, height: usize) -> Result<DisparityMap> {
    let (w, h) = map.dims();
    if (w, h) == (width, height) {
        return Ok(map.clone());
    }
    DisparityMap::new(width, height, box_resample(w, h, width, height, 1, map.values()))
}

fn box_resample(w: usize, h: usize, ow: usize, oh: usize, ch: usize, src: &[f32]) -> Vec<f32> {
    let span = |o: usize, n: usize, on: usize| {
        let a = o * n / on;
        let b = ((o + 1) * n / on).max(a + 1).min(n);
        a..b
    };
    let mut out = Vec::with_capacity(ow * oh * ch);
    for oy in 0..oh {
        let ys = span(oy, h, oh);
        for ox in 0..ow {
            let xs = span(ox, w, ow);
            let mut acc = [0.0f64; 3];
            for y in ys.clone() {
                for x in xs.clone() {
                    for c in 0..ch {
                        acc[c] += src[(y * w + x) * ch + c] as f64;
                    }
                }
            }
            let n = (ys.len() * xs.len()) as f64;
            out.extend(acc[..ch].iter().map(|v| (v / n) as f32));
        }
    }
    out
}

/// Output size for a preview scale in (0, 1].
pub fn scaled_dims(width: usize, height: usize, scale: f64) -> Result<(usize, usize)> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::invalid("scale must be in (0, 1]"));
    }
    let f = |n: usize| ((n as f64 * scale).round() as usize).max(1);
    Ok((f(width), f(height)))
}

impl AppState {
    fn clip(&self, id: &str) -> ApiResult<Arc<ClipSession>> {
        self.clips
            .read()
            .expect("clip registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown clip `{id}`")))
    }

    fn fresh_id(&self, prefix: &str) -> String {
        format!("{prefix}{}", self.next_id.fetch_add(1, Ordering::Relaxed))
    }

    fn lookup(&self, key: &(String, CacheKind, usize)) -> Option<Cached> {
        let mut cache = self.cache.lock().expect("cache lock");
        let hit = cache.entries.get(key).cloned();
        if hit.is_some() {
            cache.hits += 1;
        } else {
            cache.misses += 1;
        }
        hit
    }

    fn store(&self, key: (String, CacheKind, usize), value: Cached) {
        self.cache.lock().expect("cache lock").entries.put(key, value);
    }

    fn rgb(&self, clip: &ClipSession, t: usize) -> Result<Arc<Frame>> {
        let key = (clip.clip_id.clone(), CacheKind::Rgb, t);
        if let Some(Cached::Rgb(f)) = self.lookup(&key) {
            return Ok(f);
        }
        let frame = io::read_frame(&clip.frame_paths[t])?;
        if frame.dims() != (clip.width, clip.height) {
            return Err(Error::DimensionMismatch {
                expected_w: clip.width,
                expected_h: clip.height,
                found_w: frame.width(),
                found_h: frame.height(),
                context: Some(clip.frame_paths[t].clone()),
            });
        }
        let frame = Arc::new(frame);
        self.store(key, Cached::Rgb(frame.clone()));
        Ok(frame)
    }

    fn disparity(&self, clip: &ClipSession, t: usize) -> Result<Arc<DisparityMap>> {
        let key = (clip.clip_id.clone(), CacheKind::Disparity, t);
        if let Some(Cached::Disparity(d)) = self.lookup(&key) {
            return Ok(d);
        }
        let map = Arc::new(io::read_disparity(&clip.disparity_paths[t])?);
        self.store(key, Cached::Disparity(map.clone()));
        Ok(map)
    }

    /// Renders frame `t` at `scale` with the blur strength scaled to match.
    fn render_frame(&self, clip: &ClipSession, params: &BokehParams, t: usize, scale: f64) -> Result<Vec<u8>> {
        let (w, h) = scaled_dims(clip.width, clip.height, scale)?;
        let frame = downscale_frame(self.rgb(clip, t)?.as_ref(), w, h)?;
        let disp = downscale_disparity(self.disparity(clip, t)?.as_ref(), w, h)?;
        let scaled = BokehParams::new(params.focal, params.strength * w as f64 / clip.width as f64, params.layers)?;
        let norm = clip.norm_constant(params.focal);
        let out = self.pool.install(|| mpi::render_bokeh_frame(&frame, &disp, &scaled, norm))?;
        io::encode_frame_png(&out, BitDepth::Eight)
    }
}

#[derive(Debug, Deserialize)]
struct RegisterRequest {
    frames: PathBuf,
    disparity: PathBuf,
}

fn register_clip(state: &AppState, req: &RegisterRequest) -> Result<ClipSession> {
    let frame_paths = io::list_sequence(&req.frames)?;
    let disparity_paths = io::list_sequence(&req.disparity)?;
    if frame_paths.is_empty() {
        return Err(Error::Empty("frame directory has no frames"));
    }
    if frame_paths.len() != disparity_paths.len() {
        return Err(Error::LengthMismatch {
            expected: frame_paths.len(),
            found: disparity_paths.len(),
        });
    }
    // Only headers of colour frames are read; disparity is decoded for its range.
    let (width, height) = io::png_dimensions(&frame_paths[0])?;
    for p in &frame_paths[1..] {
        let dims = io::png_dimensions(p)?;
        if dims != (width, height) {
            return Err(Error::DimensionMismatch {
                expected_w: width,
                expected_h: height,
                found_w: dims.0,
                found_h: dims.1,
                context: Some(p.clone()),
            });
        }
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &disparity_paths {
        let d = io::read_disparity(p)?;
        if d.dims() != (width, height) {
            return Err(Error::DimensionMismatch {
                expected_w: width,
                expected_h: height,
                found_w: d.width(),
                found_h: d.height(),
                context: Some(p.clone()),
            });
        }
        let (a, b) = d.min_max();
        lo = lo.min(a as f64);
        hi = hi.max(b as f64);
    }
    Ok(ClipSession {
        clip_id: state.fresh_id("clip-"),
        frames: frame_paths.len(),
        frame_paths,
        disparity_paths,
        width,
        height,
        disparity_min: lo,
        disparity_max: hi,
    })
}

async fn post_clips(
    State(state): State<Shared>,
    body: std::result::Result<Json<RegisterRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let req = json_body(body)?;
    let st = state.clone();
    let session = tokio::task::spawn_blocking(move || register_clip(&st, &req))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    let session = Arc::new(session);
    state
        .clips
        .write()
        .expect("clip registry lock")
        .insert(session.clip_id.clone(), session.clone());
    Ok((StatusCode::CREATED, Json(session.as_ref().clone())).into_response())
}

#[derive(Debug, Deserialize)]
struct FrameQuery {
    kind: Option<String>,
    layer: Option<usize>,
    focus: Option<f64>,
    layers: Option<usize>,
    scale: Option<f64>,
}

fn frame_image(state: &AppState, clip: &ClipSession, t: usize, q: &FrameQuery) -> ApiResult<Vec<u8>> {
    let (w, h) = scaled_dims(clip.width, clip.height, q.scale.unwrap_or(1.0))?;
    let kind = q.kind.as_deref().unwrap_or("rgb");
    let focal = || -> ApiResult<FocalSpec> {
        let f = q.focus.ok_or_else(|| ApiError::bad_request(format!("kind={kind} needs focus")))?;
        Ok(FocalSpec::new(f)?)
    };
    let bytes = match kind {
        "rgb" => io::encode_frame_png(&downscale_frame(state.rgb(clip, t)?.as_ref(), w, h)?, BitDepth::Eight)?,
        "disparity" => {
            let d = downscale_disparity(state.disparity(clip, t)?.as_ref(), w, h)?;
            let span = clip.disparity_max - clip.disparity_min;
            let values: Vec<f64> = d
                .values()
                .iter()
                .map(|&v| if span > 0.0 { (v as f64 - clip.disparity_min) / span } else { 0.0 })
                .collect();
            io::encode_gray16_png(w, h, &values)?
        }
        "vd" => {
            let focal = focal()?;
            let d = downscale_disparity(state.disparity(clip, t)?.as_ref(), w, h)?;
            let vd = optics::vd_map(&d, focal, clip.norm_constant(focal));
            io::encode_gray16_png(w, h, vd.values())?
        }
        "mask" => {
            let focal = focal()?;
            let layers = q.layers.ok_or_else(|| ApiError::bad_request("kind=mask needs layers"))?;
            let layer = q.layer.ok_or_else(|| ApiError::bad_request("kind=mask needs layer"))?;
            if layer < 1 || layer > layers {
                return Err(ApiError::bad_request(format!("layer must be in 1..={layers}")));
            }
            let d = downscale_disparity(state.disparity(clip, t)?.as_ref(), w, h)?;
            let mask = optics::build_mpi_mask(&d, focal, layers, clip.norm_constant(focal))?;
            io::encode_mask_png(w, h, &mask.layer(layer))?
        }
        other => return Err(ApiError::bad_request(format!("unknown kind `{other}`"))),
    };
    Ok(bytes)
}

async fn get_frame(
    State(state): State<Shared>,
    Path((id, t)): Path<(String, usize)>,
    Query(q): Query<FrameQuery>,
) -> ApiResult<Response> {
    let clip = state.clip(&id)?;
    if t >= clip.frames {
        return Err(ApiError::not_found(format!("frame {t} outside 0..{}", clip.frames)));
    }
    let bytes = tokio::task::spawn_blocking(move || frame_image(&state, &clip, t, &q))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(png_response(bytes))
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct FocusPx {
    x: usize,
    y: usize,
    t: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct FrameRange {
    start: usize,
    end: usize,
}

#[derive(Debug, Deserialize)]
struct RenderRequest {
    focus_px: Option<FocusPx>,
    focus_disparity: Option<f64>,
    #[serde(rename = "K")]
    strength: f64,
    #[serde(rename = "N", default = "default_layers")]
    layers: usize,
    frames: Option<FrameRange>,
    renderer: Option<String>,
    preview_scale: Option<f64>,
}

fn default_layers() -> usize {
    16
}

fn resolve_render(state: &AppState, clip: &ClipSession, req: &RenderRequest) -> ApiResult<(BokehParams, usize, usize, f64)> {
    match req.renderer.as_deref() {
        None | Some("mpi") => {}
        Some("raytrace") => {
            return Err(ApiError::bad_request(
                "raytrace needs planar scene descriptions; registered clips support renderer=mpi",
            ))
        }
        Some(other) => return Err(ApiError::bad_request(format!("unknown renderer `{other}`"))),
    }
    let focal = match (req.focus_px, req.focus_disparity) {
        (Some(px), None) => {
            if px.t >= clip.frames || px.x >= clip.width || px.y >= clip.height {
                return Err(ApiError::bad_request("focus_px outside the clip"));
            }
            FocalSpec::new(state.disparity(clip, px.t)?.get(px.x, px.y) as f64)?
        }
        (None, Some(d)) => FocalSpec::new(d)?,
        _ => return Err(ApiError::bad_request("give exactly one of focus_px or focus_disparity")),
    };
    let params = BokehParams::new(focal, req.strength, req.layers)?;
    let (start, end) = match req.frames {
        Some(r) => (r.start, r.end),
        None => (0, clip.frames),
    };
    if start >= end || end > clip.frames {
        return Err(ApiError::bad_request(format!("frame range must lie in 0..{}", clip.frames)));
    }
    let scale = req.preview_scale.unwrap_or(1.0);
    scaled_dims(clip.width, clip.height, scale)?;
    Ok((params, start, end, scale))
}

async fn post_render(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: std::result::Result<Json<RenderRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let req = json_body(body)?;
    let clip = state.clip(&id)?;
    let st = state.clone();
    let c = clip.clone();
    let (params, start, end, scale) = tokio::task::spawn_blocking(move || resolve_render(&st, &c, &req))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;

    if end - start == 1 && scale <= INLINE_MAX_SCALE {
        let st = state.clone();
        let bytes = tokio::task::spawn_blocking(move || st.render_frame(&clip, &params, start, scale))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))??;
        return Ok(png_response(bytes));
    }

    let job_id = state.fresh_id("job-");
    state.jobs.lock().expect("job lock").insert(
        job_id.clone(),
        RenderJob {
            clip_id: clip.clip_id.clone(),
            params,
            start,
            end,
            scale,
            state: JobState::Queued,
            message: None,
            results: vec![None; end - start],
        },
    );
    if state.queue.try_send(job_id.clone()).is_err() {
        state.jobs.lock().expect("job lock").remove(&job_id);
        return Err(ApiError(StatusCode::CONFLICT, "render queue is full".into()));
    }
    Ok((
        StatusCode::ACCEPTED,
        Json(serde_json::json!({ "job_id": job_id, "frames": end - start })),
    )
        .into_response())
}

async fn get_job(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let jobs = state.jobs.lock().expect("job lock");
    let job = jobs.get(&id).ok_or_else(|| ApiError::not_found(format!("unknown job `{id}`")))?;
    Ok(Json(serde_json::json!({
        "job_id": id,
        "clip_id": job.clip_id,
        "state": job.state,
        "progress": job.progress(),
        "total": job.end - job.start,
        "start": job.start,
        "end": job.end,
        "focus_disparity": job.params.focal.disparity(),
        "message": job.message,
    }))
    .into_response())
}

async fn get_job_result(State(state): State<Shared>, Path((id, t)): Path<(String, usize)>) -> ApiResult<Response> {
    let jobs = state.jobs.lock().expect("job lock");
    let job = jobs.get(&id).ok_or_else(|| ApiError::not_found(format!("unknown job `{id}`")))?;
    if t < job.start || t >= job.end {
        return Err(ApiError::not_found(format!("frame {t} outside job range {}..{}", job.start, job.end)));
    }
    match &job.results[t - job.start] {
        Some(bytes) => Ok(png_response(bytes.as_ref().clone())),
        None if job.state == JobState::Failed => Err(ApiError::internal(
            job.message.clone().unwrap_or_else(|| "render failed".into()),
        )),
        None => Err(ApiError(StatusCode::TOO_EARLY, format!("frame {t} not rendered yet"))),
    }
}

async fn healthz() -> &'static str {
    "ok"
}

async fn stats(State(state): State<Shared>) -> Response {
    let cache = state.cache.lock().expect("cache lock");
    Json(serde_json::json!({
        "cache_len": cache.entries.len(),
        "cache_capacity": cache.entries.cap().get(),
        "cache_hits": cache.hits,
        "cache_misses": cache.misses,
        "clips": state.clips.read().expect("clip registry lock").len(),
    }))
    .into_response()
}

fn run_job(state: &AppState, job_id: &str) {
    let (clip_id, params, start, end, scale) = {
        let mut jobs = state.jobs.lock().expect("job lock");
        let Some(job) = jobs.get_mut(job_id) else { return };
        job.state = JobState::Running;
        (job.clip_id.clone(), job.params, job.start, job.end, job.scale)
    };
    let fail = |msg: String| {
        if let Some(job) = state.jobs.lock().expect("job lock").get_mut(job_id) {
            job.state = JobState::Failed;
            job.message = Some(msg);
        }
    };
    let Ok(clip) = state.clip(&clip_id) else {
        return fail(format!("clip `{clip_id}` is gone"));
    };
    for t in start..end {
        match state.render_frame(&clip, &params, t, scale) {
            Ok(bytes) => {
                if let Some(job) = state.jobs.lock().expect("job lock").get_mut(job_id) {
                    job.results[t - start] = Some(Arc::new(bytes));
                }
            }
            Err(e) => return fail(format!("frame {t}: {e}")),
        }
    }
    if let Some(job) = state.jobs.lock().expect("job lock").get_mut(job_id) {
        job.state = JobState::Done;
    }
}

fn build_state(config: ServiceConfig) -> Result<(Shared, mpsc::Receiver<String>)> {
    let capacity = NonZeroUsize::new(config.cache_frames)
        .ok_or_else(|| Error::invalid("cache_frames must be >= 1"))?;
    if config.queue_capacity == 0 {
        return Err(Error::invalid("queue capacity must be >= 1"));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.worker_threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::invalid(e.to_string()))?;
    let (tx, rx) = mpsc::channel(config.queue_capacity);
    let state = Arc::new(AppState {
        config,
        clips: RwLock::new(HashMap::new()),
        jobs: Mutex::new(HashMap::new()),
        cache: Mutex::new(FrameCache {
            entries: LruCache::new(capacity),
            hits: 0,
            misses: 0,
        }),
        next_id: AtomicU64::new(1),
        queue: tx,
        pool,
    });
    Ok((state, rx))
}

fn router(state: Shared) -> Router {
    let limit = state.config.max_body_bytes;
    Router::new()
        .route("/healthz", get(healthz))
        .route("/stats", get(stats))
        .route("/clips", post(post_clips))
        .route("/clips/{id}/frame/{t}", get(get_frame))
        .route("/clips/{id}/render", post(post_render))
        .route("/jobs/{id}", get(get_job))
        .route("/jobs/{id}/result/{t}", get(get_job_result))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Jobs run one at a time, frame by frame, so inline previews interleave.
async fn job_worker(state: Shared, mut rx: mpsc::Receiver<String>) {
    while let Some(job_id) = rx.recv().await {
        let st = state.clone();
        let _ = tokio::task::spawn_blocking(move || run_job(&st, &job_id)).await;
    }
}

/// Running service on a background thread; shuts down on drop.
pub struct ServiceHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .map_err(|e| Error::invalid(format!("cannot start runtime: {e}")))
}

/// Binds and serves on a background thread.
pub fn spawn(config: ServiceConfig) -> Result<ServiceHandle> {
    let addr = format!("{}:{}", config.host, config.port);
    let (state, rx) = build_state(config)?;
    let std_listener = std::net::TcpListener::bind(&addr).map_err(|e| Error::io(&addr, e))?;
    std_listener.set_nonblocking(true).map_err(|e| Error::io(&addr, e))?;
    let local = std_listener.local_addr().map_err(|e| Error::io(&addr, e))?;
    let rt = runtime()?;
    let (tx, shutdown) = oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener).expect("listener");
            tokio::spawn(job_worker(state.clone(), rx));
            let _ = axum::serve(listener, router(state))
                .with_graceful_shutdown(async move {
                    let _ = shutdown.await;
                })
                .await;
        });
        rt.shutdown_background();
    });
    Ok(ServiceHandle {
        addr: local,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

/// Serves in the foreground until the process exits.
pub fn serve_blocking(config: ServiceConfig) -> Result<()> {
    let addr = format!("{}:{}", config.host, config.port);
    let (state, rx) = build_state(config)?;
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr).await.map_err(|e| Error::io(&addr, e))?;
        let local = listener.local_addr().map_err(|e| Error::io(&addr, e))?;
        println!("listening on http://{local}");
        tokio::spawn(job_worker(state.clone(), rx));
        axum::serve(listener, router(state)).await.map_err(|e| Error::io(&addr, e))
    })
}
