# Copyright 2026 The bpvae authors
# License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
"""Independent STOI / SI-SDR reference used to freeze the metric fixtures.

STOI follows Taal et al. (2011) with the MATLAB/pystoi conventions: resample
to 10 kHz, MATLAB hanning(256) window, hop 128, 512-point FFT, 15 one-third-
octave bands from 150 Hz, 30-frame segments, 40 dB silent-frame gate on the
clean signal, -15 dB clipping. Resampling goes through
scipy.signal.resample_poly, deliberately a different filter design than the
C++ resampler; the frozen tolerance absorbs that difference.

SI-SDR matches the library convention: no mean removal, +/-60 dB cap.

Run from the repo root:  python3 tests/oracles/stoi_reference.py
Rewrites tests/data/*.wav and tests/data/metrics_expected.json.
"""

import json
import os

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

FS = 16000
EPS = np.finfo(np.float64).eps


# ---- STOI ----------------------------------------------------------------

def matlab_hanning(n):
    k = np.arange(1, n + 1)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / (n + 1)))


def frames_of(x, frame, hop):
    return np.array([x[i:i + frame]
                     for i in range(0, len(x) - frame, hop)])


def remove_silent_frames(x, y, dyn_range, frame, hop):
    w = matlab_hanning(frame)
    x_frames = frames_of(x, frame, hop) * w
    y_frames = frames_of(y, frame, hop) * w
    energies = 20.0 * np.log10(np.linalg.norm(x_frames, axis=1) + EPS)
    mask = (np.max(energies) - dyn_range - energies) < 0
    x_frames, y_frames = x_frames[mask], y_frames[mask]

    n_out = (len(x_frames) - 1) * hop + frame
    x_sil = np.zeros(n_out)
    y_sil = np.zeros(n_out)
    for i, (xf, yf) in enumerate(zip(x_frames, y_frames)):
        x_sil[i * hop:i * hop + frame] += xf
        y_sil[i * hop:i * hop + frame] += yf
    return x_sil, y_sil


def thirdoct(fs, nfft, num_bands, min_freq):
    f = np.linspace(0, fs, nfft + 1)[: nfft // 2 + 1]
    k = np.arange(num_bands)
    cf = min_freq * 2.0 ** (k / 3.0)
    lo = cf * 2.0 ** (-1.0 / 6.0)
    hi = cf * 2.0 ** (1.0 / 6.0)
    obm = np.zeros((num_bands, len(f)))
    for j in range(num_bands):
        lo_ii = int(np.argmin((f - lo[j]) ** 2))
        hi_ii = int(np.argmin((f - hi[j]) ** 2))
        obm[j, lo_ii:hi_ii] = 1.0
    return obm


def band_envelopes(x, frame, hop, nfft, obm):
    w = matlab_hanning(frame)
    fr = frames_of(x, frame, hop) * w
    spec = np.fft.rfft(fr, n=nfft, axis=1)
    power = np.abs(spec) ** 2
    return np.sqrt(obm @ power.T)  # [bands x frames]


def stoi_reference(ref, est, fs):
    if fs != 10000:
        g = np.gcd(10000, fs)
        ref = resample_poly(ref, 10000 // g, fs // g)
        est = resample_poly(est, 10000 // g, fs // g)
    frame, hop, nfft, seg = 256, 128, 512, 30
    ref, est = remove_silent_frames(ref, est, 40, frame, hop)
    obm = thirdoct(10000, nfft, 15, 150)
    x = band_envelopes(ref, frame, hop, nfft, obm)
    y = band_envelopes(est, frame, hop, nfft, obm)
    if x.shape[1] < seg:
        raise ValueError("not enough frames after silence removal")
    clip = 10.0 ** (15.0 / 20.0)
    d_sum, count = 0.0, 0
    for m in range(seg, x.shape[1] + 1):
        xs = x[:, m - seg:m]
        ys = y[:, m - seg:m]
        alpha = np.linalg.norm(xs, axis=1, keepdims=True) / (
            np.linalg.norm(ys, axis=1, keepdims=True) + EPS)
        ys = np.minimum(ys * alpha, xs * (1.0 + clip))
        xn = xs - xs.mean(axis=1, keepdims=True)
        yn = ys - ys.mean(axis=1, keepdims=True)
        xn /= np.linalg.norm(xn, axis=1, keepdims=True) + EPS
        yn /= np.linalg.norm(yn, axis=1, keepdims=True) + EPS
        d_sum += np.sum(xn * yn)
        count += 1
    return d_sum / (count * 15.0)


# ---- SI-SDR ---------------------------------------------------------------

def si_sdr_reference(ref, est, cap_db=60.0):
    ref = np.asarray(ref, dtype=np.float64)
    est = np.asarray(est, dtype=np.float64)
    scale = np.dot(ref, est) / np.dot(ref, ref)
    target = scale * ref
    err = est - target
    num = np.dot(target, target)
    den = np.dot(err, err)
    if den <= 0.0:
        return cap_db
    if num <= 0.0:
        return -cap_db
    return float(np.clip(10.0 * np.log10(num / den), -cap_db, cap_db))


# ---- fixture synthesis -----------------------------------------------------

def speechlike(seconds, f0, formants, seed):
    rng = np.random.default_rng(seed)
    n = int(seconds * FS)
    t = np.arange(n) / FS
    pitch = f0 * (1.0 + 0.03 * np.sin(2 * np.pi * 4.7 * t))
    phase = 2 * np.pi * np.cumsum(pitch) / FS
    env = (0.55 + 0.45 * np.sin(2 * np.pi * 3.1 * t + rng.uniform(0, 6.28))) ** 2
    x = np.zeros(n)
    for h in range(1, 40):
        f = h * f0
        if f > 0.45 * FS:
            break
        gain = sum(np.exp(-0.5 * ((f - fc) / bw) ** 2)
                   for fc, bw in formants) / (1.0 + f / 900.0)
        x += gain * np.sin(h * phase + rng.uniform(0, 6.28))
    x *= env
    x += 0.002 * rng.standard_normal(n)
    return 0.45 * x / np.max(np.abs(x))


def white(n, seed):
    return np.random.default_rng(seed).standard_normal(n)


def pink(n, seed):
    rng = np.random.default_rng(seed)
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.maximum(np.fft.rfftfreq(n, 1.0 / FS), 1.0)
    return np.fft.irfft(spec / np.sqrt(f), n)


def hum(n, seed):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / FS
    x = sum(np.sin(2 * np.pi * 50.0 * h * t + rng.uniform(0, 6.28)) / h
            for h in range(1, 7))
    return x + 0.1 * rng.standard_normal(n)


def band_noise(n, seed):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / FS
    carrier = np.sin(2 * np.pi * 1800.0 * t)
    lp = np.convolve(rng.standard_normal(n), np.ones(32) / 32, mode="same")
    return lp * carrier


def mix_at_snr(speech, noise, snr_db):
    noise = noise[: len(speech)]
    ps = np.mean(speech ** 2)
    pn = np.mean(noise ** 2)
    gain = np.sqrt(ps / (pn * 10.0 ** (snr_db / 10.0)))
    return speech + gain * noise


def lowpass(x, cutoff_hz):
    spec = np.fft.rfft(x)
    f = np.fft.rfftfreq(len(x), 1.0 / FS)
    spec[f > cutoff_hz] = 0.0
    return np.fft.irfft(spec, len(x))


def build_fixtures():
    sp = [speechlike(2.0, f0, fm, seed)
          for seed, (f0, fm) in enumerate([
              (110, [(560, 90), (1480, 120), (2620, 170)]),
              (150, [(700, 110), (1220, 130), (2900, 190)]),
              (200, [(480, 80), (1720, 140), (2510, 160)]),
              (125, [(640, 100), (1350, 120), (2780, 180)]),
              (170, [(520, 95), (1600, 135), (2400, 150)]),
          ])]
    n = len(sp[0])

    gappy = sp[4].copy()
    gappy[: FS // 4] = 0.0
    gappy[n // 2: n // 2 + FS // 4] = 0.0

    pairs = [
        ("identity", sp[0], sp[0].copy()),
        ("white_snr10", sp[0], mix_at_snr(sp[0], white(n, 101), 10)),
        ("white_snr0", sp[0], mix_at_snr(sp[0], white(n, 102), 0)),
        ("pink_snr5", sp[1], mix_at_snr(sp[1], pink(n, 103), 5)),
        ("hum_snrm5", sp[1], mix_at_snr(sp[1], hum(n, 104), -5)),
        ("band_snr0", sp[2], mix_at_snr(sp[2], band_noise(n, 105), 0)),
        ("scaled_white_snr15", sp[2],
         0.3 * mix_at_snr(sp[2], white(n, 106), 15)),
        ("lowpass2k", sp[3], lowpass(sp[3], 2000.0)),
        ("envelope_white_snr20", sp[3],
         mix_at_snr(sp[3] * (0.4 + 0.6 * (np.sin(
             2 * np.pi * 1.3 * np.arange(n) / FS) > 0)), white(n, 107), 20)),
        ("gaps_white_snr5", gappy, mix_at_snr(gappy, white(n, 108), 5)),
    ]
    return pairs


def main():
    out_dir = os.path.join(os.path.dirname(__file__), "..", "data")
    os.makedirs(out_dir, exist_ok=True)
    table = []
    for i, (name, ref, est) in enumerate(build_fixtures()):
        ref32 = ref.astype(np.float32)
        est32 = est.astype(np.float32)
        ref_file = f"metric{i:02d}_{name}_ref.wav"
        est_file = f"metric{i:02d}_{name}_est.wav"
        wavfile.write(os.path.join(out_dir, ref_file), FS, ref32)
        wavfile.write(os.path.join(out_dir, est_file), FS, est32)
        # Score exactly what the files hold (float32 quantization included).
        r64 = ref32.astype(np.float64)
        e64 = est32.astype(np.float64)
        table.append({
            "name": name,
            "reference": ref_file,
            "estimate": est_file,
            "stoi": stoi_reference(r64, e64, FS),
            "si_sdr_db": si_sdr_reference(r64, e64),
        })
    with open(os.path.join(out_dir, "metrics_expected.json"), "w") as f:
        json.dump(table, f, indent=2)
    for row in table:
        print(f"{row['name']:24s} stoi={row['stoi']:.6f} "
              f"si_sdr={row['si_sdr_db']:+.3f} dB")


if __name__ == "__main__":
    main()
