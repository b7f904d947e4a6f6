#!/usr/bin/env node
// Skeleton: wrap a neural speech denoiser as a markbench transform plugin,
// used as the second stage of the noise-then-denoise attack.
//
// Pattern: load model -> read WAV -> enhance -> write WAV. The bench injects
// the noise itself (the attack controls the noise level); this wrapper only
// performs the enhancement pass.
//
// Wire-up example (cascade stage in a plan):
//   {"label": "denoise-attack-10db", "cascade": [
//     {"kind": "noise", "params": {"snr_db": 10.0}},
//     {"kind": "plugin", "params": {
//       "executable": "adapters/dist/skeletons/denoiser-adapter.js",
//       "timeout": 300}}]}

import * as fs from 'node:fs'

import { parseInvocation } from '../protocol.js'
import { decodeWav, encodeWavFloat32 } from '../wav.js'

const HELP = `neural denoiser adapter (skeleton)

usage: denoiser-adapter.js transform --in in.wav --out out.wav

environment:
  DENOISER_MODEL_DIR   directory holding the enhancement checkpoint (required)

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

    const modelDir = process.env.DENOISER_MODEL_DIR
    if (!modelDir || !fs.existsSync(modelDir)) {
        process.stderr.write(
            'model not installed: set DENOISER_MODEL_DIR to the enhancement model ' +
                'checkpoint directory\n'
        )
        return 2
    }

    const audio = decodeWav(fs.readFileSync(inv.inPath))

    // --- model inference goes here -------------------------------------
    // const model = loadDenoiser(modelDir)
    // audio.samples = model.enhance(audio.samples, audio.sampleRate)
    // --------------------------------------------------------------------
    process.stderr.write('skeleton: passing audio through unchanged\n')
    fs.writeFileSync(inv.outPath, encodeWavFloat32(audio))
    return 0
}

try {
    process.exit(main(process.argv.slice(2)))
} catch (err) {
    process.stderr.write(`${err instanceof Error ? err.message : String(err)}\n`)
    process.exit(1)
}
