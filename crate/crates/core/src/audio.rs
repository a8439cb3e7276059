//! Multichannel PCM clips and RIFF/WAVE I/O.

use std::path::Path;

use thiserror::Error;

/// Lowest sample rate accepted anywhere in the toolkit.
pub const MIN_SAMPLE_RATE: u32 = 8000;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("clip has no channels")]
    NoChannels,
    #[error("channel {channel} has {len} samples, expected {expected}")]
    RaggedChannels {
        channel: usize,
        len: usize,
        expected: usize,
    },
    #[error("non-finite sample in channel {channel} at index {index}")]
    NonFinite { channel: usize, index: usize },
    #[error("sample rate {0} Hz is below {MIN_SAMPLE_RATE} Hz")]
    SampleRate(u32),
    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("channel counts differ: {0} vs {1}")]
    ChannelMismatch(usize, usize),
    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),
    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
}

/// Channel arrangement, derived from the channel count.
///
/// Five channels are interpreted as L, R, C, Ls, Rs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelLayout {
    Mono,
    Stereo,
    Surround50,
}

impl ChannelLayout {
    pub fn from_count(n: usize) -> Option<Self> {
        match n {
            1 => Some(ChannelLayout::Mono),
            2 => Some(ChannelLayout::Stereo),
            5 => Some(ChannelLayout::Surround50),
            _ => None,
        }
    }
}

/// A block of real-valued PCM audio, nominal full scale ±1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    sample_rate: u32,
    channels: Vec<Vec<f64>>,
}

impl AudioClip {
    pub fn new(sample_rate: u32, channels: Vec<Vec<f64>>) -> Result<Self, AudioError> {
        if sample_rate < MIN_SAMPLE_RATE {
            return Err(AudioError::SampleRate(sample_rate));
        }
        let expected = channels.first().ok_or(AudioError::NoChannels)?.len();
        for (channel, samples) in channels.iter().enumerate() {
            if samples.len() != expected {
                return Err(AudioError::RaggedChannels {
                    channel,
                    len: samples.len(),
                    expected,
                });
            }
            if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
                return Err(AudioError::NonFinite { channel, index });
            }
        }
        Ok(AudioClip {
            sample_rate,
            channels,
        })
    }

    pub fn silence(sample_rate: u32, channels: usize, frames: usize) -> Result<Self, AudioError> {
        Self::new(sample_rate, vec![vec![0.0; frames]; channels])
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn layout(&self) -> Option<ChannelLayout> {
        ChannelLayout::from_count(self.channels.len())
    }

    /// Number of sample frames (samples per channel).
    pub fn frames(&self) -> usize {
        self.channels[0].len()
    }

    pub fn duration_secs(&self) -> f64 {
        self.frames() as f64 / self.sample_rate as f64
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    pub fn peak(&self) -> f64 {
        self.channels
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, s| m.max(s.abs()))
    }

    /// Returns a copy extended with trailing silence to `frames`.
    /// Clips already at least that long are returned unchanged.
    pub fn padded_to(&self, frames: usize) -> AudioClip {
        let mut channels = self.channels.clone();
        for c in &mut channels {
            if c.len() < frames {
                c.resize(frames, 0.0);
            }
        }
        AudioClip {
            sample_rate: self.sample_rate,
            channels,
        }
    }

    /// Applies `f` to every sample, keeping layout and length.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> AudioClip {
        AudioClip {
            sample_rate: self.sample_rate,
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|&s| f(s)).collect())
                .collect(),
        }
    }

    /// Sample-wise `self * a + other * b`. Both clips must share rate, layout and length.
    pub fn mix_scaled(&self, a: f64, other: &AudioClip, b: f64) -> Result<AudioClip, AudioError> {
        self.check_compatible(other)?;
        if self.frames() != other.frames() {
            return Err(AudioError::RaggedChannels {
                channel: 0,
                len: other.frames(),
                expected: self.frames(),
            });
        }
        let channels = self
            .channels
            .iter()
            .zip(&other.channels)
            .map(|(x, y)| x.iter().zip(y).map(|(&x, &y)| a * x + b * y).collect())
            .collect();
        Ok(AudioClip {
            sample_rate: self.sample_rate,
            channels,
        })
    }

    pub fn check_compatible(&self, other: &AudioClip) -> Result<(), AudioError> {
        if self.sample_rate != other.sample_rate {
            return Err(AudioError::RateMismatch(self.sample_rate, other.sample_rate));
        }
        if self.channel_count() != other.channel_count() {
            return Err(AudioError::ChannelMismatch(
                self.channel_count(),
                other.channel_count(),
            ));
        }
        Ok(())
    }

    /// Returns the clip with its channel order reversed.
    pub fn reversed_channels(&self) -> AudioClip {
        let mut channels = self.channels.clone();
        channels.reverse();
        AudioClip {
            sample_rate: self.sample_rate,
            channels,
        }
    }
}

/// Sample encoding for [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Pcm24,
    Float32,
}

/// Reads a PCM 16/24-bit or 32-bit float WAV file with one or two channels.
///
/// Integer samples are divided by 2^(bits-1).
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    let n_channels = spec.channels as usize;
    if !(1..=2).contains(&n_channels) {
        return Err(AudioError::UnsupportedFormat(format!(
            "{n_channels} channels"
        )));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = (1_i64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()?
        }
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()?,
        (format, bits) => {
            return Err(AudioError::UnsupportedFormat(format!("{format:?} {bits}-bit")));
        }
    };
    let frames = interleaved.len() / n_channels;
    let mut channels = vec![Vec::with_capacity(frames); n_channels];
    for frame in interleaved.chunks_exact(n_channels) {
        for (c, &s) in frame.iter().enumerate() {
            channels[c].push(s);
        }
    }
    AudioClip::new(spec.sample_rate, channels)
}

/// Writes `clip` to `path`. Integer encodings clamp to the representable range.
pub fn write_wav(
    path: impl AsRef<Path>,
    clip: &AudioClip,
    encoding: WavEncoding,
) -> Result<(), AudioError> {
    let (bits, format) = match encoding {
        WavEncoding::Pcm16 => (16, hound::SampleFormat::Int),
        WavEncoding::Pcm24 => (24, hound::SampleFormat::Int),
        WavEncoding::Float32 => (32, hound::SampleFormat::Float),
    };
    let spec = hound::WavSpec {
        channels: clip.channel_count() as u16,
        sample_rate: clip.sample_rate,
        bits_per_sample: bits,
        sample_format: format,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    let scale = (1_i64 << (bits - 1)) as f64;
    for i in 0..clip.frames() {
        for c in &clip.channels {
            match encoding {
                WavEncoding::Float32 => writer.write_sample(c[i] as f32)?,
                _ => {
                    let v = (c[i] * scale).round().clamp(-scale, scale - 1.0) as i32;
                    writer.write_sample(v)?
                }
            }
        }
    }
    writer.finalize()?;
    Ok(())
}
