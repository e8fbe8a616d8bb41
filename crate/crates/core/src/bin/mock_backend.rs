//! Line-protocol test double for the external backend.
//!
//! Speaks the same pipe protocol as a real segmenter wrapper and, depending
//! on `--mode`, either behaves (constant 0.5 maps) or misbehaves in one
//! specific way so client error handling can be exercised end to end.

use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::Result;
use clap::Parser;

use promptfuse::imaging::{load_image, save_raster_f32, Raster};

#[derive(Parser)]
#[command(name = "mock-backend")]
struct Args {
    /// ok | err | badmagic | wrongdims | garbage
    #[arg(long, default_value = "ok")]
    mode: String,
}

/// A constant map carries no spatial information, which is exactly what a
/// protocol-level test double should produce.
const FILL: f32 = 0.5;

fn image_dims(path: &str) -> Result<(u32, u32)> {
    let img = load_image(Path::new(path))?;
    Ok((img.width(), img.height()))
}

fn write_constant(path: &Path, width: u32, height: u32) -> Result<()> {
    save_raster_f32(&Raster::filled(width, height, FILL), path)?;
    Ok(())
}

/// Writes a raster container whose magic bytes are wrong.
fn write_bad_magic(path: &Path) -> Result<()> {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"XMAP");
    bytes.extend_from_slice(&4u32.to_le_bytes());
    bytes.extend_from_slice(&4u32.to_le_bytes());
    bytes.extend_from_slice(&[0u8; 64]);
    std::fs::write(path, bytes)?;
    Ok(())
}

enum Reply {
    Ok(String),
    Err(String),
    Raw(String),
}

fn handle_predict(mode: &str, image: &str, out: &str) -> Result<Reply> {
    Ok(match mode {
        "ok" => {
            let (w, h) = image_dims(image)?;
            write_constant(Path::new(out), w, h)?;
            Reply::Ok(out.to_owned())
        }
        "err" => Reply::Err("mock backend refuses this request".to_owned()),
        "badmagic" => {
            write_bad_magic(Path::new(out))?;
            Reply::Ok(out.to_owned())
        }
        "wrongdims" => {
            let (w, h) = image_dims(image)?;
            write_constant(Path::new(out), w + 1, h)?;
            Reply::Ok(out.to_owned())
        }
        "garbage" => Reply::Raw("THIS IS NOT A PROTOCOL LINE".to_owned()),
        other => Reply::Err(format!("unknown mock mode {other}")),
    })
}

fn handle_predict_all(mode: &str, image: &str, dir: &str) -> Result<Reply> {
    let dir_path = Path::new(dir);
    Ok(match mode {
        "ok" => {
            let (w, h) = image_dims(image)?;
            std::fs::create_dir_all(dir_path)?;
            for k in 0..4 {
                write_constant(&dir_path.join(format!("cand_{k}.pmap")), w, h)?;
            }
            Reply::Ok("4".to_owned())
        }
        "err" => Reply::Err("mock backend refuses this request".to_owned()),
        "badmagic" => {
            std::fs::create_dir_all(dir_path)?;
            write_bad_magic(&dir_path.join("cand_0.pmap"))?;
            Reply::Ok("1".to_owned())
        }
        "wrongdims" => {
            let (w, h) = image_dims(image)?;
            std::fs::create_dir_all(dir_path)?;
            write_constant(&dir_path.join("cand_0.pmap"), w + 1, h)?;
            Reply::Ok("1".to_owned())
        }
        "garbage" => Reply::Raw("THIS IS NOT A PROTOCOL LINE".to_owned()),
        other => Reply::Err(format!("unknown mock mode {other}")),
    })
}

fn main() -> Result<()> {
    let args = Args::parse();
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();

    for line in stdin.lock().lines() {
        let line = line?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let reply = match tokens.as_slice() {
            ["PREDICT", image, _x0, _y0, _x1, _y1, out] => {
                handle_predict(&args.mode, image, out)
                    .unwrap_or_else(|e| Reply::Err(e.to_string()))
            }
            ["PREDICT_ALL", image, dir] => handle_predict_all(&args.mode, image, dir)
                .unwrap_or_else(|e| Reply::Err(e.to_string())),
            _ => Reply::Err("malformed request".to_owned()),
        };
        match reply {
            Reply::Ok(payload) => writeln!(stdout, "OK {payload}")?,
            Reply::Err(msg) => writeln!(stdout, "ERR {msg}")?,
            Reply::Raw(text) => writeln!(stdout, "{text}")?,
        }
        stdout.flush()?;
    }
    Ok(())
}
