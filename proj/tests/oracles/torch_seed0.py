"""Reference forward passes of a weight file with PyTorch (float64).

Parses the weight file independently of the C++ reader and prints the
values frozen in tests/test_model.cpp.

    python3 tests/oracles/torch_seed0.py seed0.fpmw
"""
import struct
import sys
import zlib

import torch
import torch.nn.functional as F


def read(path):
    buf = open(path, "rb").read()
    assert buf[:4] == b"FPMW"
    assert zlib.crc32(buf[:-4]) == struct.unpack("<I", buf[-4:])[0]
    pos = 4
    version, variant, n, m, lam, slope = struct.unpack_from("<IBHHff", buf, pos)
    pos += struct.calcsize("<IBHHff")
    (id_len,) = struct.unpack_from("<H", buf, pos)
    pos += 2 + id_len
    (count,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    layers = [[], [], [], []]
    for _ in range(count):
        t, kind, cin, cout, k, s, p, op = struct.unpack_from("<BBHHBBBB", buf, pos)
        pos += 10
        layer = dict(kind=kind, k=k, s=s, p=p, op=op)
        if kind != 2:
            (nw,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            w = struct.unpack_from("<%df" % nw, buf, pos)
            pos += 4 * nw
            (nb,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            b = struct.unpack_from("<%df" % nb, buf, pos)
            pos += 4 * nb
            shape = (cout, cin, k, k) if kind == 0 else (cin, cout, k, k)
            layer["w"] = torch.tensor(w, dtype=torch.float64).reshape(shape)
            layer["b"] = torch.tensor(b, dtype=torch.float64)
        layers[t].append(layer)
    return dict(n=n, m=m, slope=slope, layers=layers)


def run(x, layers, slope):
    for l in layers:
        if l["kind"] == 0:
            x = F.conv2d(x, l["w"], l["b"], stride=l["s"], padding=l["p"])
        elif l["kind"] == 1:
            x = F.conv_transpose2d(x, l["w"], l["b"], stride=l["s"], padding=l["p"], output_padding=l["op"])
        else:
            x = F.leaky_relu(x, float(slope))
    return x


def main(path):
    w = read(path)
    x = torch.full((1, 1, 64, 64), 0.5, dtype=torch.float64)
    y = run(x, w["layers"][0], w["slope"])
    z = run(y, w["layers"][2], w["slope"])
    # Integer-valued test patterns for the two synthesis sides.
    n, m = w["n"], w["m"]
    zi = torch.tensor([[[(c * 7 + yy * 3 + xx) % 5 - 2 for xx in range(2)] for yy in range(2)] for c in range(m)],
                      dtype=torch.float64)[None]
    yi = torch.tensor([[[(c * 3 + yy * 5 + xx) % 7 - 3 for xx in range(4)] for yy in range(4)] for c in range(n)],
                      dtype=torch.float64)[None]
    p = run(zi, w["layers"][3], w["slope"])
    mu, sigma = p[:, :n], torch.clamp(torch.exp(p[:, n:]), min=0.11)
    xh = torch.clamp(run(yi, w["layers"][1], w["slope"]), 0, 1)
    print("y", tuple(y.shape), "sum %.10g" % y.sum().item(), "abs %.10g" % y.abs().sum().item())
    print("y[0,0,0] %.10g y[5,2,3] %.10g y[127,3,1] %.10g" % (y[0, 0, 0, 0].item(), y[0, 5, 2, 3].item(), y[0, 127, 3, 1].item()))
    print("z", tuple(z.shape), "sum %.10g" % z.sum().item(), "z[0] %.10g z[100] %.10g" % (z[0, 0, 0, 0].item(), z[0, 100, 0, 0].item()))
    print("mu", tuple(mu.shape), "sum %.10g mu[3,5,2] %.10g" % (mu.sum().item(), mu[0, 3, 5, 2].item()))
    print("sigma sum %.10g sigma[100,7,1] %.10g" % (sigma.sum().item(), sigma[0, 100, 7, 1].item()))
    print("xhat sum %.10g xhat[0,0] %.10g xhat[31,17] %.10g" % (xh.sum().item(), xh[0, 0, 0, 0].item(), xh[0, 0, 31, 17].item()))


if __name__ == "__main__":
    main(sys.argv[1])
