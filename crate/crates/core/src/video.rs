//! Sequential luma readers for Y4M and raw planar YUV 4:2:0, plus a small
//! Y4M writer used to produce test clips.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::complexity::LumaFrame;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chroma {
    Mono,
    C420,
    C422,
    C444,
}

impl Chroma {
    fn plane_samples(self, width: usize, height: usize) -> usize {
        let (cw, ch) = (width.div_ceil(2), height.div_ceil(2));
        match self {
            Chroma::Mono => 0,
            Chroma::C420 => 2 * cw * ch,
            Chroma::C422 => 2 * cw * height,
            Chroma::C444 => 2 * width * height,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoInfo {
    pub width: usize,
    pub height: usize,
    pub fps_num: u32,
    pub fps_den: u32,
    pub bit_depth: u8,
    pub chroma: Chroma,
}

impl VideoInfo {
    pub fn framerate(&self) -> f64 {
        f64::from(self.fps_num) / f64::from(self.fps_den)
    }

    fn bytes_per_sample(&self) -> usize {
        if self.bit_depth > 8 {
            2
        } else {
            1
        }
    }
}

pub trait FrameSource {
    fn info(&self) -> VideoInfo;
    fn read_frame(&mut self) -> Result<Option<LumaFrame>>;

    /// Read up to `n` frames; an empty vector means end of stream.
    fn read_frames(&mut self, n: usize) -> Result<Vec<LumaFrame>> {
        let mut frames = Vec::with_capacity(n);
        while frames.len() < n {
            match self.read_frame()? {
                Some(f) => frames.push(f),
                None => break,
            }
        }
        Ok(frames)
    }
}

pub struct Y4mReader<R> {
    inner: R,
    info: VideoInfo,
    line: Vec<u8>,
    buf: Vec<u8>,
}

impl<R: BufRead> Y4mReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut line = Vec::new();
        inner.read_until(b'\n', &mut line)?;
        let info = parse_y4m_header(&line)?;
        Ok(Y4mReader {
            inner,
            info,
            line,
            buf: Vec::new(),
        })
    }
}

fn parse_y4m_header(line: &[u8]) -> Result<VideoInfo> {
    let text = std::str::from_utf8(line)
        .map_err(|_| Error::Input("Y4M header is not ASCII".into()))?
        .trim_end();
    let mut tokens = text.split(' ');
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(Error::Input("missing YUV4MPEG2 signature".into()));
    }
    let (mut width, mut height) = (None, None);
    let (mut fps_num, mut fps_den) = (25, 1);
    let mut colorspace = "420";
    for tok in tokens.filter(|t| !t.is_empty()) {
        let (tag, val) = tok.split_at(1);
        match tag {
            "W" => width = val.parse().ok(),
            "H" => height = val.parse().ok(),
            "F" => {
                let (n, d) = val
                    .split_once(':')
                    .ok_or_else(|| Error::Input(format!("bad framerate {val}")))?;
                fps_num = n.parse().map_err(|_| Error::Input(format!("bad framerate {val}")))?;
                fps_den = d.parse().map_err(|_| Error::Input(format!("bad framerate {val}")))?;
            }
            "I" => {
                if val != "p" && val != "?" {
                    return Err(Error::Input(format!("interlaced Y4M (I{val}) is not supported")));
                }
            }
            "C" => colorspace = val,
            _ => {}
        }
    }
    let width: usize = width.ok_or_else(|| Error::Input("Y4M header lacks width".into()))?;
    let height: usize = height.ok_or_else(|| Error::Input("Y4M header lacks height".into()))?;
    if width == 0 || height == 0 || fps_num == 0 || fps_den == 0 {
        return Err(Error::Input("Y4M header has zero dimension or framerate".into()));
    }
    let (chroma, bit_depth) = match colorspace {
        "420" | "420jpeg" | "420paldv" | "420mpeg2" => (Chroma::C420, 8),
        "422" => (Chroma::C422, 8),
        "444" => (Chroma::C444, 8),
        "mono" => (Chroma::Mono, 8),
        "420p10" => (Chroma::C420, 10),
        "422p10" => (Chroma::C422, 10),
        "444p10" => (Chroma::C444, 10),
        "mono10" => (Chroma::Mono, 10),
        other => return Err(Error::Input(format!("unsupported Y4M colorspace {other}"))),
    };
    Ok(VideoInfo {
        width,
        height,
        fps_num,
        fps_den,
        bit_depth,
        chroma,
    })
}

fn decode_luma(info: &VideoInfo, bytes: &[u8]) -> Result<LumaFrame> {
    let samples = if info.bytes_per_sample() == 1 {
        bytes.iter().map(|&b| u16::from(b)).collect()
    } else {
        bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect()
    };
    LumaFrame::new(info.width, info.height, samples)
}

impl<R: BufRead> FrameSource for Y4mReader<R> {
    fn info(&self) -> VideoInfo {
        self.info
    }

    fn read_frame(&mut self) -> Result<Option<LumaFrame>> {
        self.line.clear();
        if self.inner.read_until(b'\n', &mut self.line)? == 0 {
            return Ok(None);
        }
        if !self.line.starts_with(b"FRAME") {
            return Err(Error::Input("expected FRAME marker".into()));
        }
        let bps = self.info.bytes_per_sample();
        let luma = self.info.width * self.info.height * bps;
        let chroma = self.info.chroma.plane_samples(self.info.width, self.info.height) * bps;
        self.buf.resize(luma + chroma, 0);
        self.inner
            .read_exact(&mut self.buf)
            .map_err(|e| Error::Input(format!("truncated Y4M frame: {e}")))?;
        decode_luma(&self.info, &self.buf[..luma]).map(Some)
    }
}

/// Headerless planar YUV 4:2:0.
pub struct RawYuvReader<R> {
    inner: R,
    info: VideoInfo,
    buf: Vec<u8>,
}

impl<R: Read> RawYuvReader<R> {
    pub fn new(inner: R, width: usize, height: usize, bit_depth: u8, fps: (u32, u32)) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Input("raw YUV dimensions must be positive".into()));
        }
        if bit_depth != 8 && bit_depth != 10 {
            return Err(Error::Input(format!("raw YUV bit depth {bit_depth} must be 8 or 10")));
        }
        let info = VideoInfo {
            width,
            height,
            fps_num: fps.0,
            fps_den: fps.1,
            bit_depth,
            chroma: Chroma::C420,
        };
        Ok(RawYuvReader {
            inner,
            info,
            buf: Vec::new(),
        })
    }
}

impl<R: Read> FrameSource for RawYuvReader<R> {
    fn info(&self) -> VideoInfo {
        self.info
    }

    fn read_frame(&mut self) -> Result<Option<LumaFrame>> {
        let bps = self.info.bytes_per_sample();
        let luma = self.info.width * self.info.height * bps;
        let total = luma + self.info.chroma.plane_samples(self.info.width, self.info.height) * bps;
        self.buf.resize(total, 0);
        let mut filled = 0;
        while filled < total {
            let n = self.inner.read(&mut self.buf[filled..])?;
            if n == 0 {
                break;
            }
            filled += n;
        }
        match filled {
            0 => Ok(None),
            n if n < total => Err(Error::Input(format!("truncated raw frame ({n} of {total} bytes)"))),
            _ => decode_luma(&self.info, &self.buf[..luma]).map(Some),
        }
    }
}

/// Raw-input parameters; Y4M input carries its own.
#[derive(Debug, Clone, Copy)]
pub struct RawFormat {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub fps: (u32, u32),
}

/// Open a Y4M file, or a raw 4:2:0 file when `raw` is given.
pub fn open(path: &Path, raw: Option<RawFormat>) -> Result<Box<dyn FrameSource + Send>> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let reader = BufReader::new(file);
    Ok(match raw {
        Some(r) => Box::new(RawYuvReader::new(reader, r.width, r.height, r.bit_depth, r.fps)?),
        None => Box::new(Y4mReader::new(reader)?),
    })
}

/// Writes luma frames as Y4M 4:2:0 with neutral chroma.
pub struct Y4mWriter<W: Write> {
    out: W,
    width: usize,
    height: usize,
    bit_depth: u8,
}

impl<W: Write> Y4mWriter<W> {
    pub fn new(mut out: W, width: usize, height: usize, fps: (u32, u32), bit_depth: u8) -> Result<Self> {
        let cs = if bit_depth > 8 { "420p10" } else { "420jpeg" };
        writeln!(out, "YUV4MPEG2 W{width} H{height} F{}:{} Ip A1:1 C{cs}", fps.0, fps.1)?;
        Ok(Y4mWriter {
            out,
            width,
            height,
            bit_depth,
        })
    }

    pub fn write_frame(&mut self, frame: &LumaFrame) -> Result<()> {
        if frame.width() != self.width || frame.height() != self.height {
            return Err(Error::Input("frame size differs from Y4M header".into()));
        }
        self.out.write_all(b"FRAME\n")?;
        let chroma = Chroma::C420.plane_samples(self.width, self.height);
        if self.bit_depth > 8 {
            for &s in frame.samples() {
                self.out.write_all(&s.to_le_bytes())?;
            }
            let mid = 512u16.to_le_bytes();
            for _ in 0..chroma {
                self.out.write_all(&mid)?;
            }
        } else {
            let bytes: Vec<u8> = frame.samples().iter().map(|&s| s.min(255) as u8).collect();
            self.out.write_all(&bytes)?;
            self.out.write_all(&vec![128u8; chroma])?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_y4m(path: &Path, frames: &[LumaFrame], fps: (u32, u32), bit_depth: u8) -> Result<()> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Input("no frames to write".into()))?;
    let file = File::create(path).map_err(|e| Error::file(path, e))?;
    let mut w = Y4mWriter::new(BufWriter::new(file), first.width(), first.height(), fps, bit_depth)?;
    for f in frames {
        w.write_frame(f)?;
    }
    w.finish()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn frame(w: usize, h: usize, seed: u16) -> LumaFrame {
        LumaFrame::new(w, h, (0..w * h).map(|i| (i as u16).wrapping_mul(seed) % 256).collect()).unwrap()
    }

    #[test]
    fn y4m_round_trip_luma() {
        let frames = vec![frame(6, 4, 3), frame(6, 4, 7)];
        let mut w = Y4mWriter::new(Vec::new(), 6, 4, (24, 1), 8).unwrap();
        for f in &frames {
            w.write_frame(f).unwrap();
        }
        let bytes = w.finish().unwrap();
        let mut r = Y4mReader::new(Cursor::new(bytes)).unwrap();
        assert_eq!(r.info().framerate(), 24.0);
        assert_eq!(r.read_frames(10).unwrap(), frames);
        assert!(r.read_frame().unwrap().is_none());
    }

    #[test]
    fn ten_bit_y4m() {
        let f = LumaFrame::new(4, 2, vec![0, 1, 512, 1023, 7, 8, 9, 10]).unwrap();
        let mut w = Y4mWriter::new(Vec::new(), 4, 2, (30000, 1001), 10).unwrap();
        w.write_frame(&f).unwrap();
        let mut r = Y4mReader::new(Cursor::new(w.finish().unwrap())).unwrap();
        assert_eq!(r.info().bit_depth, 10);
        assert_eq!(r.read_frame().unwrap().unwrap(), f);
    }

    #[test]
    fn rejects_interlaced() {
        let hdr = b"YUV4MPEG2 W4 H4 F24:1 It C420\n".to_vec();
        assert!(matches!(Y4mReader::new(Cursor::new(hdr)), Err(Error::Input(_))));
    }

    #[test]
    fn rejects_bad_signature_and_truncation() {
        assert!(Y4mReader::new(Cursor::new(b"RIFF W4 H4\n".to_vec())).is_err());
        let mut data = b"YUV4MPEG2 W4 H4 F24:1 C420\nFRAME\n".to_vec();
        data.extend_from_slice(&[0u8; 10]);
        let mut r = Y4mReader::new(Cursor::new(data)).unwrap();
        assert!(r.read_frame().is_err());
    }

    #[test]
    fn raw_420_reader() {
        let (w, h) = (4usize, 2usize);
        let mut data = Vec::new();
        for s in 0..3u8 {
            data.extend((0..w * h).map(|i| i as u8 + s));
            data.extend(std::iter::repeat_n(128, 2 * 2));
        }
        let mut r = RawYuvReader::new(Cursor::new(data), w, h, 8, (24, 1)).unwrap();
        let frames = r.read_frames(5).unwrap();
        assert_eq!(frames.len(), 3);
        assert_eq!(frames[2].at(0, 0), 2);
        assert_eq!(frames[1].at(3, 1), 8);
    }

    #[test]
    fn raw_truncated_frame_is_error() {
        let mut r = RawYuvReader::new(Cursor::new(vec![0u8; 9]), 4, 2, 8, (24, 1)).unwrap();
        assert!(r.read_frame().is_err());
    }
}
