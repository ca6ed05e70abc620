import numpy as np

from phqnet import corpus


def random_samples(rng, dims, n=5, t_range=(3, 12), phq=None):
    out = []
    for i in range(n):
        s = corpus.SentenceSample("p%d" % (i % 3), i, int(rng.integers(0, 25)) if phq is None else phq)
        for m, F in dims.items():
            T = int(rng.integers(*t_range))
            setattr(s, {"audio": "audio_features", "visual": "visual_features",
                        "linguistic": "text_features"}[m], rng.standard_normal((T, F)).astype(np.float32))
        out.append(s)
    return out


def model_fd_errors(model, batch, rng, n_coords, h=1e-5):
    """Relative errors between analytic and central-difference gradients of the eval-mode loss."""
    model.params.zero_grad()
    loss = model.loss(batch)
    loss.backward()
    names = model.params.names()
    sizes = np.array([model.params[n].data.size for n in names])
    errors = []
    for _ in range(n_coords):
        name = names[int(rng.choice(len(names), p=np.sqrt(sizes) / np.sqrt(sizes).sum()))]
        p = model.params[name]
        idx = np.unravel_index(int(rng.integers(p.data.size)), p.data.shape)
        analytic = model.params.grad(name)[idx]
        old = p.data[idx]
        p.data[idx] = old + h
        up = float(model.loss(batch).data)
        p.data[idx] = old - h
        down = float(model.loss(batch).data)
        p.data[idx] = old
        numeric = (up - down) / (2 * h)
        errors.append(abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-6))
    return np.array(errors)


def naive_power(frame, n_fft):
    padded = np.zeros(n_fft)
    padded[: len(frame)] = frame
    k = np.arange(n_fft // 2 + 1)[:, None]
    n = np.arange(n_fft)[None, :]
    re = (padded * np.cos(2 * np.pi * k * n / n_fft)).sum(axis=1)
    im = -(padded * np.sin(2 * np.pi * k * n / n_fft)).sum(axis=1)
    return re**2 + im**2


def naive_filterbank(n_filters, n_fft, sr, low, high):
    def mel(f):
        return 2595 * np.log10(1 + f / 700)

    def hz(m):
        return 700 * (10 ** (m / 2595) - 1)

    m_lo, m_hi = mel(low), mel(high)
    edges = [hz(m_lo + i * (m_hi - m_lo) / (n_filters + 1)) for i in range(n_filters + 2)]
    w = np.zeros((n_filters, n_fft // 2 + 1))
    for i in range(n_filters):
        a, c, b = edges[i], edges[i + 1], edges[i + 2]
        for j in range(n_fft // 2 + 1):
            f = j * sr / n_fft
            if a <= f <= c:
                w[i, j] = (f - a) / (c - a)
            elif c < f <= b:
                w[i, j] = (b - f) / (b - c)
    return w


def naive_dct(x, n_out):
    N = len(x)
    out = np.zeros(n_out)
    for k in range(n_out):
        s = sum(x[n] * np.cos(np.pi * k * (2 * n + 1) / (2 * N)) for n in range(N))
        out[k] = s * np.sqrt((1 if k == 0 else 2) / N)
    return out


def fuzz_line(rng):
    pieces = ["bout", "till", "lookin", "I'm", "don't", "24", "7", "1000", "Hello,", "WORLD!", "...",
              "''", "o'clock", "rock'n'roll", "café", "tab\there", "x-ray", "3.5", "été", "'quoted'",
              "ABC123def", "999999", "  ", "\n"]
    n = int(rng.integers(0, 12))
    return " ".join(pieces[int(rng.integers(len(pieces)))] for _ in range(n))
