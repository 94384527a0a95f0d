//! HTTP binding of the site routes.

use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, SystemTime};

use anyhow::{Context, Result};
use axum::body::{Body, Bytes};
use axum::extract::State;
use axum::http::{header, HeaderMap, HeaderValue, Method as HttpMethod, StatusCode, Uri};
use axum::response::Response as HttpResponse;
use axum::Router;
use skosframe_core::entailment::entail;
use skosframe_core::server::{Method, Request, Response, SharedSnapshot, Site};
use skosframe_core::store::{load_dir, REGISTRY_FILE};
use tokio::net::TcpListener;

#[derive(Clone)]
struct AppState {
    site: Arc<Site>,
    snapshot: SharedSnapshot,
}

pub fn router(site: Site, snapshot: SharedSnapshot) -> Router {
    Router::new().fallback(dispatch).with_state(AppState { site: Arc::new(site), snapshot })
}

fn to_request(method: &HttpMethod, uri: &Uri, headers: &HeaderMap, body: Bytes) -> Request {
    let header_text = |name| headers.get(name).and_then(|v: &HeaderValue| v.to_str().ok()).map(str::to_string);
    Request {
        method: match *method {
            HttpMethod::GET => Method::Get,
            HttpMethod::HEAD => Method::Head,
            HttpMethod::POST => Method::Post,
            _ => Method::Other,
        },
        path: uri.path().to_string(),
        query: uri.query().map(str::to_string),
        accept: header_text(header::ACCEPT),
        content_type: header_text(header::CONTENT_TYPE),
        body: body.to_vec(),
    }
}

fn to_response(r: Response) -> HttpResponse {
    let mut b = HttpResponse::builder().status(StatusCode::from_u16(r.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR));
    if let Some(ct) = r.content_type {
        b = b.header(header::CONTENT_TYPE, ct);
    }
    if let Some(loc) = r.location {
        b = b.header(header::LOCATION, loc);
    }
    if let Some(allow) = r.allow {
        b = b.header(header::ALLOW, allow);
    }
    if r.vary_accept {
        b = b.header(header::VARY, "Accept");
    }
    b.body(Body::from(r.body)).unwrap_or_else(|_| {
        let mut resp = HttpResponse::new(Body::empty());
        *resp.status_mut() = StatusCode::INTERNAL_SERVER_ERROR;
        resp
    })
}

async fn dispatch(State(st): State<AppState>, method: HttpMethod, uri: Uri, headers: HeaderMap, body: Bytes) -> HttpResponse {
    let req = to_request(&method, &uri, &headers, body);
    let snap = st.snapshot.load();
    let site = st.site.clone();
    let resp = match tokio::task::spawn_blocking(move || site.handle(&snap, &req)).await {
        Ok(r) => r,
        Err(e) => {
            log::error!("{method} {} handler failed: {e}", uri.path());
            return to_response(Response { status: 500, content_type: None, location: None, allow: None, vary_accept: false, body: Vec::new() });
        }
    };
    log::info!("{method} {} {}", uri, resp.status);
    to_response(resp)
}

/// Modification time of the store registry, which every save rewrites.
fn store_stamp(dir: &std::path::Path) -> Option<SystemTime> {
    std::fs::metadata(dir.join(REGISTRY_FILE)).and_then(|m| m.modified()).ok()
}

/// Reloads the store directory whenever it is rewritten and swaps the
/// served snapshot. Each reload is re-closed before being served.
pub fn spawn_reloader(dir: PathBuf, snapshot: SharedSnapshot, every: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut last = store_stamp(&dir);
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            let now = store_stamp(&dir);
            if now.is_none() || now == last {
                continue;
            }
            last = now;
            let d = dir.clone();
            let loaded = tokio::task::spawn_blocking(move || {
                load_dir(&d).map(|(mut store, _)| {
                    entail(&mut store);
                    store.snapshot()
                })
            })
            .await;
            match loaded {
                Ok(Ok(snap)) => {
                    log::info!("reloaded store {} ({} concepts)", dir.display(), snap.concept_count());
                    snapshot.replace(snap);
                }
                Ok(Err(e)) => log::warn!("store reload failed: {e}"),
                Err(e) => log::warn!("store reload failed: {e}"),
            }
        }
    })
}

pub async fn bind(addr: &str) -> Result<TcpListener> {
    TcpListener::bind(addr).await.with_context(|| format!("cannot listen on {addr}"))
}

/// Serves until `shutdown` resolves.
pub async fn serve(listener: TcpListener, site: Site, snapshot: SharedSnapshot, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<()> {
    let app = router(site, snapshot);
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    Ok(())
}
