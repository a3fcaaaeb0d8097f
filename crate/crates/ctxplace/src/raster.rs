//! PNG export of cue drawings.

use std::sync::{Arc, OnceLock};

use ctxplace_core::vac::Drawing;
use resvg::{tiny_skia, usvg};

use crate::Error;

fn fonts() -> Arc<usvg::fontdb::Database> {
    static DB: OnceLock<Arc<usvg::fontdb::Database>> = OnceLock::new();
    DB.get_or_init(|| {
        let mut db = usvg::fontdb::Database::new();
        db.load_system_fonts();
        Arc::new(db)
    })
    .clone()
}

/// Rasterizes an SVG document at its own pixel size.
pub fn svg_to_png(svg: &str) -> Result<Vec<u8>, Error> {
    let opt = usvg::Options {
        fontdb: fonts(),
        ..usvg::Options::default()
    };
    let tree = usvg::Tree::from_str(svg, &opt).map_err(|e| Error::Render(e.to_string()))?;
    let size = tree.size().to_int_size();
    let mut pixmap = tiny_skia::Pixmap::new(size.width(), size.height())
        .ok_or_else(|| Error::Render("empty canvas".into()))?;
    pixmap.fill(tiny_skia::Color::WHITE);
    resvg::render(&tree, tiny_skia::Transform::default(), &mut pixmap.as_mut());
    pixmap.encode_png().map_err(|e| Error::Render(e.to_string()))
}

pub fn drawing_to_png(d: &Drawing) -> Result<Vec<u8>, Error> {
    svg_to_png(&d.to_svg())
}
