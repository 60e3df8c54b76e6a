use std::collections::BTreeMap;
use std::io::{self, Read, Write};

/// Per-pixel instance labels and view-axis depth, row-major from the
/// top-left pixel. Unwritten pixels have label 0 and infinite depth.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelBuffer {
    width: u32,
    height: u32,
    pub(crate) labels: Vec<u16>,
    pub(crate) depth: Vec<f64>,
}

impl LabelBuffer {
    pub fn new(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        LabelBuffer {
            width,
            height,
            labels: vec![0; n],
            depth: vec![f64::INFINITY; n],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn depth(&self) -> &[f64] {
        &self.depth
    }

    pub fn label_at(&self, col: u32, row: u32) -> u16 {
        self.labels[self.index(col, row)]
    }

    pub fn depth_at(&self, col: u32, row: u32) -> f64 {
        self.depth[self.index(col, row)]
    }

    fn index(&self, col: u32, row: u32) -> usize {
        assert!(col < self.width && row < self.height, "pixel ({col}, {row}) out of range");
        row as usize * self.width as usize + col as usize
    }

    pub fn count_label(&self, label: u16) -> u64 {
        self.labels.iter().filter(|&&l| l == label).count() as u64
    }

    /// Pixel counts for every nonzero label present.
    pub fn label_counts(&self) -> BTreeMap<u16, u64> {
        let mut m = BTreeMap::new();
        for &l in &self.labels {
            if l != 0 {
                *m.entry(l).or_insert(0) += 1;
            }
        }
        m
    }

    /// Inclusive pixel extents `[col_min, row_min, col_max, row_max]` of each
    /// nonzero label.
    pub fn label_extents(&self) -> BTreeMap<u16, [u32; 4]> {
        let mut m: BTreeMap<u16, [u32; 4]> = BTreeMap::new();
        for row in 0..self.height {
            for col in 0..self.width {
                let l = self.labels[row as usize * self.width as usize + col as usize];
                if l == 0 {
                    continue;
                }
                m.entry(l)
                    .and_modify(|e| {
                        e[0] = e[0].min(col);
                        e[1] = e[1].min(row);
                        e[2] = e[2].max(col);
                        e[3] = e[3].max(row);
                    })
                    .or_insert([col, row, col, row]);
            }
        }
        m
    }

    /// Binary 16-bit PGM, big-endian samples.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "P5\n{} {}\n65535\n", self.width, self.height)?;
        let mut bytes = Vec::with_capacity(self.labels.len() * 2);
        for &l in &self.labels {
            bytes.extend_from_slice(&l.to_be_bytes());
        }
        w.write_all(&bytes)
    }

    /// Reads labels written by [`write_pgm`](Self::write_pgm). Depth is left
    /// infinite.
    pub fn read_pgm<R: Read>(mut r: R) -> io::Result<Self> {
        let mut data = Vec::new();
        r.read_to_end(&mut data)?;
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < data.len() && !data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated PGM header"));
            }
            fields.push(String::from_utf8_lossy(&data[start..pos]).into_owned());
        }
        pos += 1;
        if fields[0] != "P5" || fields[3] != "65535" {
            return Err(bad("expected a 16-bit P5 PGM"));
        }
        let width: u32 = fields[1].parse().map_err(|_| bad("bad width"))?;
        let height: u32 = fields[2].parse().map_err(|_| bad("bad height"))?;
        let mut buf = LabelBuffer::new(width, height);
        let body = data.get(pos..).unwrap_or_default();
        if body.len() != buf.labels.len() * 2 {
            return Err(bad("PGM body length does not match its header"));
        }
        for (l, b) in buf.labels.iter_mut().zip(body.chunks_exact(2)) {
            *l = u16::from_be_bytes([b[0], b[1]]);
        }
        Ok(buf)
    }

    /// Raw depth: little-endian u32 width and height, then one little-endian
    /// f32 per pixel (infinity where nothing was hit).
    pub fn write_depth_raw<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut bytes = Vec::with_capacity(8 + self.depth.len() * 4);
        bytes.extend_from_slice(&self.width.to_le_bytes());
        bytes.extend_from_slice(&self.height.to_le_bytes());
        for &d in &self.depth {
            bytes.extend_from_slice(&(d as f32).to_le_bytes());
        }
        w.write_all(&bytes)
    }

    /// Reads a raw depth map as `(width, height, values)`.
    pub fn read_depth_raw<R: Read>(mut r: R) -> io::Result<(u32, u32, Vec<f32>)> {
        let mut data = Vec::new();
        r.read_to_end(&mut data)?;
        if data.len() < 8 {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "truncated depth header"));
        }
        let w = u32::from_le_bytes(data[0..4].try_into().unwrap());
        let h = u32::from_le_bytes(data[4..8].try_into().unwrap());
        if data.len() - 8 != w as usize * h as usize * 4 {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "depth body length mismatch"));
        }
        let values = data[8..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok((w, h, values))
    }
}
