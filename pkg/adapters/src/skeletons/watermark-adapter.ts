#!/usr/bin/env node
// Skeleton: wrap a neural watermark as a markbench embedder/detector pair.
// One executable serves both roles; the bench invokes `embed` and `detect`
// as separate subprocess calls.
//
// Wire-up example (markbench plan):
//   "watermark": {"plugin": {
//       "embed":  {"executable": "adapters/dist/skeletons/watermark-adapter.js"},
//       "detect": {"executable": "adapters/dist/skeletons/watermark-adapter.js"},
//       "native_rate": 16000},
//    "bandsplit": true}

import * as fs from 'node:fs'

import { parseInvocation, printScore } from '../protocol.js'
import { decodeWav, encodeWavFloat32 } from '../wav.js'

const HELP = `neural watermark adapter (skeleton)

usage: watermark-adapter.js embed  --in in.wav --out out.wav
       watermark-adapter.js detect --in in.wav --out ignored.wav

environment:
  WATERMARK_MODEL_DIR   directory holding embedder+detector checkpoints (required)

embed writes the watermarked WAV to --out; detect prints {"score": s} on
stdout. exit codes: 0 success, 2 model not installed, 1 usage/protocol error
`

function main(argv: string[]): number {
    if (argv.includes('--help') || argv.includes('-h')) {
        process.stdout.write(HELP)
        return 0
    }
    const inv = parseInvocation(argv)
    if (inv.role !== 'embed' && inv.role !== 'detect') {
        process.stderr.write('this adapter implements the embed and detect roles\n')
        return 1
    }

    const modelDir = process.env.WATERMARK_MODEL_DIR
    if (!modelDir || !fs.existsSync(modelDir)) {
        process.stderr.write(
            'model not installed: set WATERMARK_MODEL_DIR to the directory with the ' +
                'embedder and detector checkpoints\n'
        )
        return 2
    }

    const audio = decodeWav(fs.readFileSync(inv.inPath))
    if (inv.role === 'embed') {
        if (!inv.outPath) {
            process.stderr.write('embed needs --out\n')
            return 1
        }
        // --- embedder inference goes here --------------------------------
        // audio.samples = model.embed(audio.samples, audio.sampleRate)
        // ------------------------------------------------------------------
        process.stderr.write('skeleton: passing audio through unchanged\n')
        fs.writeFileSync(inv.outPath, encodeWavFloat32(audio))
    } else {
        // --- detector inference goes here --------------------------------
        // const score = model.detect(audio.samples, audio.sampleRate)
        // ------------------------------------------------------------------
        printScore(0.0)
    }
    return 0
}

try {
    process.exit(main(process.argv.slice(2)))
} catch (err) {
    process.stderr.write(`${err instanceof Error ? err.message : String(err)}\n`)
    process.exit(1)
}
