//! YUV4MPEG2 and headerless planar readers. Only the luma plane is kept.

use std::io::{self, BufRead, BufReader, Read, Write};

use super::{LumaFrame, VideoSequence};
use crate::error::{Error, Result};

const SIGNATURE: &[u8] = b"YUV4MPEG2";
const FRAME_TAG: &[u8] = b"FRAME";
const MAX_HEADER_LEN: usize = 4096;

/// Chroma subsampling of an 8-bit planar stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChromaFormat {
    Yuv420,
    Yuv422,
    Yuv444,
    Mono,
}

impl ChromaFormat {
    /// Parses a Y4M `C` tag value or a raw-format name (`420`, `422`, `444`, `mono`).
    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "420" | "420jpeg" | "420paldv" | "420mpeg2" => Some(Self::Yuv420),
            "422" => Some(Self::Yuv422),
            "444" => Some(Self::Yuv444),
            "mono" => Some(Self::Mono),
            _ => None,
        }
    }

    /// Bytes occupied by both chroma planes of one frame.
    pub fn chroma_bytes(self, width: usize, height: usize) -> usize {
        let half_w = width.div_ceil(2);
        match self {
            Self::Yuv420 => 2 * half_w * height.div_ceil(2),
            Self::Yuv422 => 2 * half_w * height,
            Self::Yuv444 => 2 * width * height,
            Self::Mono => 0,
        }
    }
}

struct Counting<R> {
    inner: R,
    offset: u64,
}

impl<R: BufRead> Counting<R> {
    /// Reads through the next `\n`; returns the line without it, or `None` at clean EOF.
    fn read_line(&mut self, what: &str) -> Result<Option<Vec<u8>>> {
        let start = self.offset;
        let mut line = Vec::new();
        let n = (&mut self.inner)
            .take(MAX_HEADER_LEN as u64 + 1)
            .read_until(b'\n', &mut line)?;
        self.offset += n as u64;
        if n == 0 {
            return Ok(None);
        }
        if line.last() != Some(&b'\n') {
            let message = if line.len() > MAX_HEADER_LEN {
                format!("{what} longer than {MAX_HEADER_LEN} bytes")
            } else {
                format!("{what} truncated before newline")
            };
            return Err(Error::VideoParse {
                offset: start,
                message,
            });
        }
        line.pop();
        Ok(Some(line))
    }

    fn read_payload(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        let mut filled = 0;
        while filled < buf.len() {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        self.offset += filled as u64;
        if filled < buf.len() {
            return Err(Error::VideoParse {
                offset: self.offset,
                message: format!(
                    "truncated {what}: expected {} bytes, stream ended after {filled}",
                    buf.len()
                ),
            });
        }
        Ok(())
    }

    fn skip(&mut self, len: usize, what: &str) -> Result<()> {
        let copied = io::copy(&mut (&mut self.inner).take(len as u64), &mut io::sink())?;
        self.offset += copied;
        if copied < len as u64 {
            return Err(Error::VideoParse {
                offset: self.offset,
                message: format!(
                    "truncated {what}: expected {len} bytes, stream ended after {copied}"
                ),
            });
        }
        Ok(())
    }

    fn at_eof(&mut self) -> Result<bool> {
        Ok(self.inner.fill_buf()?.is_empty())
    }
}

struct Header {
    width: usize,
    height: usize,
    frame_rate: f64,
    chroma: ChromaFormat,
}

fn parse_header(line: &[u8]) -> Result<Header> {
    let bad = |offset: usize, message: String| Error::VideoParse {
        offset: offset as u64,
        message,
    };
    if !line.starts_with(SIGNATURE) {
        return Err(bad(0, "missing YUV4MPEG2 signature".into()));
    }
    let text = std::str::from_utf8(line).map_err(|_| bad(0, "header is not ASCII".into()))?;
    let mut width = None;
    let mut height = None;
    let mut frame_rate = None;
    let mut chroma = ChromaFormat::Yuv420;

    let mut pos = SIGNATURE.len();
    for token in text[SIGNATURE.len()..].split(' ') {
        let at = pos;
        pos += token.len() + 1;
        if token.is_empty() {
            continue;
        }
        let (key, value) = token.split_at(1);
        match key {
            "W" | "H" => {
                let v: usize = value
                    .parse()
                    .map_err(|_| bad(at, format!("bad dimension token {token:?}")))?;
                if v == 0 {
                    return Err(bad(at, format!("zero dimension in {token:?}")));
                }
                if key == "W" {
                    width = Some(v);
                } else {
                    height = Some(v);
                }
            }
            "F" => {
                let (num, den) = value
                    .split_once(':')
                    .ok_or_else(|| bad(at, format!("bad frame rate token {token:?}")))?;
                let num: u64 = num
                    .parse()
                    .map_err(|_| bad(at, format!("bad frame rate token {token:?}")))?;
                let den: u64 = den
                    .parse()
                    .map_err(|_| bad(at, format!("bad frame rate token {token:?}")))?;
                if num == 0 || den == 0 {
                    return Err(bad(
                        at,
                        format!("frame rate must be positive, got {token:?}"),
                    ));
                }
                frame_rate = Some(num as f64 / den as f64);
            }
            "C" => {
                chroma = ChromaFormat::from_tag(value)
                    .ok_or_else(|| bad(at, format!("unsupported colorspace {value:?}")))?;
            }
            // interlacing, aspect ratio and extensions do not affect the luma layout
            "I" | "A" | "X" => {}
            _ => return Err(bad(at, format!("unknown header token {token:?}"))),
        }
    }
    let width = width.ok_or_else(|| bad(0, "header lacks W".into()))?;
    let height = height.ok_or_else(|| bad(0, "header lacks H".into()))?;
    let frame_rate = frame_rate.ok_or_else(|| bad(0, "header lacks F".into()))?;
    Ok(Header {
        width,
        height,
        frame_rate,
        chroma,
    })
}

/// Reads a YUV4MPEG2 stream, keeping the Y plane of every frame.
pub fn parse_y4m<R: Read>(reader: R) -> Result<VideoSequence> {
    let mut src = Counting {
        inner: BufReader::new(reader),
        offset: 0,
    };
    let header_line = src
        .read_line("stream header")?
        .ok_or_else(|| Error::VideoParse {
            offset: 0,
            message: "empty stream".into(),
        })?;
    let header = parse_header(&header_line)?;
    let luma_len = header.width * header.height;
    let chroma_len = header.chroma.chroma_bytes(header.width, header.height);

    let mut frames = Vec::new();
    loop {
        let frame_start = src.offset;
        let Some(tag) = src.read_line("frame header")? else {
            break;
        };
        if !(tag.starts_with(FRAME_TAG) && matches!(tag.get(FRAME_TAG.len()), None | Some(b' '))) {
            return Err(Error::VideoParse {
                offset: frame_start,
                message: format!("expected FRAME marker for frame {}", frames.len()),
            });
        }
        let mut luma = vec![0u8; luma_len];
        src.read_payload(&mut luma, &format!("frame {} luma payload", frames.len()))?;
        src.skip(
            chroma_len,
            &format!("frame {} chroma payload", frames.len()),
        )?;
        frames.push(LumaFrame::new(header.width, header.height, luma)?);
    }
    if frames.is_empty() {
        return Err(Error::VideoParse {
            offset: src.offset,
            message: "stream has no frames".into(),
        });
    }
    VideoSequence::new(frames, header.frame_rate)
}

/// Reads headerless planar 8-bit YUV with externally supplied geometry.
pub fn parse_raw_planar<R: Read>(
    reader: R,
    width: usize,
    height: usize,
    chroma: ChromaFormat,
    frame_rate: f64,
) -> Result<VideoSequence> {
    if width == 0 || height == 0 {
        return Err(Error::VideoParse {
            offset: 0,
            message: format!("zero dimension {width}x{height}"),
        });
    }
    let mut src = Counting {
        inner: BufReader::new(reader),
        offset: 0,
    };
    let luma_len = width * height;
    let chroma_len = chroma.chroma_bytes(width, height);
    let mut frames = Vec::new();
    while !src.at_eof()? {
        let mut luma = vec![0u8; luma_len];
        src.read_payload(&mut luma, &format!("frame {} luma payload", frames.len()))?;
        src.skip(
            chroma_len,
            &format!("frame {} chroma payload", frames.len()),
        )?;
        frames.push(LumaFrame::new(width, height, luma)?);
    }
    if frames.is_empty() {
        return Err(Error::VideoParse {
            offset: 0,
            message: "stream has no frames".into(),
        });
    }
    VideoSequence::new(frames, frame_rate)
}

/// Writes `seq` as 4:2:0 YUV4MPEG2 with neutral (128) chroma.
pub fn write_y4m<W: Write>(seq: &VideoSequence, mut w: W) -> Result<()> {
    let fps = seq.frame_rate();
    let (num, den) = if fps.fract() == 0.0 {
        (fps as u64, 1)
    } else {
        ((fps * 1000.0).round() as u64, 1000)
    };
    writeln!(
        w,
        "YUV4MPEG2 W{} H{} F{num}:{den} Ip A1:1 C420",
        seq.width(),
        seq.height()
    )?;
    let chroma = vec![128u8; ChromaFormat::Yuv420.chroma_bytes(seq.width(), seq.height())];
    for f in seq.frames() {
        w.write_all(b"FRAME\n")?;
        w.write_all(f.samples())?;
        w.write_all(&chroma)?;
    }
    w.flush()?;
    Ok(())
}
