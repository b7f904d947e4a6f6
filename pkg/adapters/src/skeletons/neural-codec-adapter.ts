#!/usr/bin/env node
// Skeleton: wrap a neural audio codec (encode -> decode round trip) as a
// markbench transform plugin.
//
// The structure every codec wrapper follows:
//   1. resolve + load the model  (here: gated on CODEC_MODEL_DIR)
//   2. read the input WAV, resample to the codec's rate if needed
//   3. encode at the configured bitrate, then decode
//   4. write the reconstruction to --out at the input's sample rate
//
// Without a model installed this exits 2 so the bench records a clean
// per-trial failure instead of silently passing audio through.
//
// Wire-up example (markbench plan):
//   {"label": "codec-6kbps", "kind": "plugin",
//    "params": {"executable": "adapters/dist/skeletons/neural-codec-adapter.js",
//               "args": ["--bitrate", "6.0"], "timeout": 120}}

import * as fs from 'node:fs'

import { parseInvocation } from '../protocol.js'
import { decodeWav, encodeWavFloat32 } from '../wav.js'

const HELP = `neural codec adapter (skeleton)

usage: neural-codec-adapter.js transform --in in.wav --out out.wav [--bitrate KBPS]

environment:
  CODEC_MODEL_DIR   directory holding the codec checkpoint (required)

exit codes: 0 success, 2 model not installed, 1 usage/protocol error
`

function main(argv: string[]): number {
    if (argv.includes('--help') || argv.includes('-h')) {
        process.stdout.write(HELP)
        return 0
    }
    const inv = parseInvocation(argv)
    if (inv.role !== 'transform' || !inv.outPath) {
        process.stderr.write('this adapter implements the transform role and needs --out\n')
        return 1
    }

    const modelDir = process.env.CODEC_MODEL_DIR
    if (!modelDir || !fs.existsSync(modelDir)) {
        process.stderr.write(
            'model not installed: set CODEC_MODEL_DIR to a directory containing the ' +
                'codec checkpoint (e.g. download the release weights and point the ' +
                'variable at them)\n'
        )
        return 2
    }

    const bitrate = Number(inv.extra.get('--bitrate') ?? '6.0')
    const audio = decodeWav(fs.readFileSync(inv.inPath))

    // --- model inference goes here -------------------------------------
    // const codec = loadCodec(modelDir)
    // const tokens = codec.encode(audio.samples, audio.sampleRate, bitrate)
    // const reconstructed = codec.decode(tokens)
    // --------------------------------------------------------------------
    process.stderr.write(
        `skeleton: passing audio through unchanged (would encode at ${bitrate} kbps)\n`
    )
    fs.writeFileSync(inv.outPath, encodeWavFloat32(audio))
    return 0
}

try {
    process.exit(main(process.argv.slice(2)))
} catch (err) {
    process.stderr.write(`${err instanceof Error ? err.message : String(err)}\n`)
    process.exit(1)
}
