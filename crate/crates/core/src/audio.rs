//! Mono PCM buffers and WAV I/O.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mono PCM samples in `[-1, 1]` at a fixed sample rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioSignal {
    sample_rate: u32,
    samples: Vec<f32>,
}

impl AudioSignal {
    pub fn new(sample_rate: u32, samples: Vec<f32>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidSampleRate(sample_rate));
        }
        Ok(AudioSignal { sample_rate, samples })
    }

    pub fn silence(sample_rate: u32, len: usize) -> Result<Self> {
        Self::new(sample_rate, vec![0.0; len])
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f32] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

/// On-disk sample encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WavFormat {
    #[default]
    Int16,
    Float32,
}

impl WavFormat {
    fn spec(self, sample_rate: u32) -> hound::WavSpec {
        match self {
            WavFormat::Int16 => hound::WavSpec {
                channels: 1,
                sample_rate,
                bits_per_sample: 16,
                sample_format: hound::SampleFormat::Int,
            },
            WavFormat::Float32 => hound::WavSpec {
                channels: 1,
                sample_rate,
                bits_per_sample: 32,
                sample_format: hound::SampleFormat::Float,
            },
        }
    }
}

/// Streaming mono WAV writer; samples are clamped to `[-1, 1]`.
pub struct WavSink {
    writer: hound::WavWriter<BufWriter<File>>,
    format: WavFormat,
}

impl WavSink {
    pub fn create(path: impl AsRef<Path>, sample_rate: u32, format: WavFormat) -> Result<Self> {
        let writer = hound::WavWriter::create(path, format.spec(sample_rate))?;
        Ok(WavSink { writer, format })
    }

    pub fn write(&mut self, samples: &[f32]) -> Result<()> {
        for &s in samples {
            let s = s.clamp(-1.0, 1.0);
            match self.format {
                WavFormat::Int16 => self.writer.write_sample((s * 32767.0).round() as i16)?,
                WavFormat::Float32 => self.writer.write_sample(s)?,
            }
        }
        Ok(())
    }

    pub fn finalize(self) -> Result<()> {
        self.writer.finalize()?;
        Ok(())
    }
}

pub fn write_wav(path: impl AsRef<Path>, signal: &AudioSignal, format: WavFormat) -> Result<()> {
    let mut sink = WavSink::create(path, signal.sample_rate(), format)?;
    sink.write(signal.samples())?;
    sink.finalize()
}

/// Streaming WAV reader yielding the first channel as `f32`.
pub struct WavSource {
    reader: hound::WavReader<std::io::BufReader<File>>,
}

impl WavSource {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Ok(WavSource { reader: hound::WavReader::open(path)? })
    }

    pub fn sample_rate(&self) -> u32 {
        self.reader.spec().sample_rate
    }

    /// Reads up to `max` frames into `out` (cleared first). Returns the count.
    pub fn read_chunk(&mut self, out: &mut Vec<f32>, max: usize) -> Result<usize> {
        out.clear();
        let spec = self.reader.spec();
        let channels = usize::from(spec.channels.max(1));
        match spec.sample_format {
            hound::SampleFormat::Float => {
                let mut it = self.reader.samples::<f32>();
                'outer: while out.len() < max {
                    for ch in 0..channels {
                        match it.next() {
                            Some(s) => {
                                if ch == 0 {
                                    out.push(s?);
                                }
                            }
                            None => break 'outer,
                        }
                    }
                }
            }
            hound::SampleFormat::Int => {
                let scale = 1.0 / (1i64 << (spec.bits_per_sample - 1)) as f32;
                let mut it = self.reader.samples::<i32>();
                'outer: while out.len() < max {
                    for ch in 0..channels {
                        match it.next() {
                            Some(s) => {
                                if ch == 0 {
                                    out.push(s? as f32 * scale);
                                }
                            }
                            None => break 'outer,
                        }
                    }
                }
            }
        }
        Ok(out.len())
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let mut src = WavSource::open(path)?;
    let rate = src.sample_rate();
    let mut all = Vec::new();
    let mut chunk = Vec::new();
    while src.read_chunk(&mut chunk, 1 << 16)? > 0 {
        all.extend_from_slice(&chunk);
    }
    AudioSignal::new(rate, all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_rejected() {
        assert!(AudioSignal::new(0, vec![]).is_err());
    }

    #[test]
    fn wav_round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let sig = AudioSignal::new(20_000, vec![0.0, 0.5, -0.5, 1.0, -1.0, 0.25]).unwrap();

        let p = dir.path().join("f.wav");
        write_wav(&p, &sig, WavFormat::Float32).unwrap();
        assert_eq!(read_wav(&p).unwrap(), sig);

        let p = dir.path().join("i.wav");
        write_wav(&p, &sig, WavFormat::Int16).unwrap();
        let back = read_wav(&p).unwrap();
        assert_eq!(back.sample_rate(), 20_000);
        for (a, b) in back.samples().iter().zip(sig.samples()) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }
}
