"""Regenerates tests/unit/oracle_values.hpp from PyTorch reference ops.

Inputs are closed-form sequences so the C++ side needs no random state:
wave(n, phase, amp)[i] = amp * sin(0.7 * i + phase).
"""
import math
import sys

import torch
import torch.nn.functional as F

torch.set_default_dtype(torch.float64)


def wave(n, phase, amp=1.0):
    return torch.tensor([amp * math.sin(0.7 * i + phase) for i in range(n)])


def emit(name, t):
    vals = ", ".join(repr(float(v)) for v in t.flatten().tolist())
    return f"inline constexpr double {name}[] = {{{vals}}};\n"


out = ["// Generated by tests/oracles/generate.py. Do not edit.\n#pragma once\n\nnamespace oracle {\n\n"]

# LSTM cell: D=3, H=2, batch 2. Gate order i, f, g, o; one bias.
D, H, B = 3, 2, 2
x = wave(B * D, 0.1).reshape(B, D)
h = wave(B * H, 0.5, 0.5).reshape(B, H)
c = wave(B * H, 0.9, 0.8).reshape(B, H)
wi = wave(4 * H * D, 1.3, 0.6).reshape(4 * H, D)
wh = wave(4 * H * H, 1.7, 0.6).reshape(4 * H, H)
b = wave(4 * H, 2.1, 0.3)
cell = torch.nn.LSTMCell(D, H)
with torch.no_grad():
    cell.weight_ih.copy_(wi); cell.weight_hh.copy_(wh)
    cell.bias_ih.copy_(b); cell.bias_hh.zero_()
    h1, c1 = cell(x, (h, c))
out.append("// lstm_cell: D=3 H=2 B=2\n")
out.append(emit("lstm_h", h1)); out.append(emit("lstm_c", c1))

# conv2d stride 2 pad 1: x 1x2x5x5, w 3x2x3x3
cx = wave(50, 0.2).reshape(1, 2, 5, 5)
cw = wave(54, 0.4, 0.5).reshape(3, 2, 3, 3)
out.append("// conv2d: x 1x2x5x5 wave(0.2), w 3x2x3x3 wave(0.4,0.5), stride 2 pad 1\n")
out.append(emit("conv_out", F.conv2d(cx, cw, stride=2, padding=1)))

# batch norm, training mode: x 2x3x2x2, gamma wave(0.3,0.5)+1, beta wave(0.8,0.2)
bx = wave(24, 0.6, 2.0).reshape(2, 3, 2, 2)
gamma = wave(3, 0.3, 0.5) + 1.0
beta = wave(3, 0.8, 0.2)
rm = torch.zeros(3); rv = torch.ones(3)
by = F.batch_norm(bx, rm, rv, gamma, beta, training=True, momentum=0.1, eps=1e-5)
out.append("// batch_norm2d training: x 2x3x2x2 wave(0.6,2)\n")
out.append(emit("bn_out", by)); out.append(emit("bn_running_mean", rm)); out.append(emit("bn_running_var", rv))

# cross entropy: logits 3x5 wave(0.0,2), labels {4,0,2}
logits = wave(15, 0.0, 2.0).reshape(3, 5).requires_grad_(True)
loss = F.cross_entropy(logits, torch.tensor([4, 0, 2]))
loss.backward()
out.append("// cross_entropy: logits 3x5 wave(0,2), labels 4 0 2\n")
out.append(emit("ce_loss", loss.detach().reshape(1))); out.append(emit("ce_grad", logits.grad))

# bilinear resize, half-pixel centers: 1x3x4x6 -> short side 3 -> 3x5 (rounded 4.5 -> 5)
rx = wave(72, 0.5, 0.5).reshape(1, 3, 4, 6) + 0.5
ry = F.interpolate(rx, size=(3, 5), mode="bilinear", align_corners=False, antialias=False)
out.append("// resize: 3x4x6 wave(0.5,0.5)+0.5 -> 3x3x5\n")
out.append(emit("resize_out", ry))

# Adam, 3 steps on 4 parameters with gradients wave(step, 1)
p = wave(4, 0.0).clone().requires_grad_(True)
opt = torch.optim.Adam([p], lr=0.01, betas=(0.9, 0.999), eps=1e-8)
for step in range(3):
    opt.zero_grad()
    p.grad = wave(4, float(step + 1))
    opt.step()
out.append("// adam: p0 = wave(4,0), lr 0.01, grads wave(4, step+1) for steps 0..2\n")
out.append(emit("adam_params", p.detach()))

out.append("\n}  // namespace oracle\n")
sys.stdout.write("".join(out))
