#!/usr/bin/env node
// Conformance mock for the markbench plugin protocol.
//
// One mode per invocation, chosen with --mode:
//   echo         copy the input WAV to --out unchanged
//   tone_embed   add a -40 dB 1 kHz tone (a trivially detectable "watermark")
//   score_const  print {"score": <--score>} (default 0.5)
//   score_energy print {"score": <rms of the input>}
//   fail         exit 3 with a message on stderr
//   sleep        block for --seconds (default 30) to trip the bridge timeout
//
// Usage: mock-adapter.js <role> --in in.wav [--ref ref.wav] --out out.wav
//                        --mode <mode> [--score S] [--seconds N]

import * as fs from 'node:fs'

import { parseInvocation, printScore } from './protocol.js'
import { decodeWav, encodeWavFloat32 } from './wav.js'

const MODES = ['echo', 'tone_embed', 'score_const', 'score_energy', 'fail', 'sleep'] as const
type Mode = (typeof MODES)[number]

const HELP = `markbench mock adapter

usage: mock-adapter.js <embed|detect|transform|metric> --in <wav> [--ref <wav>] --out <wav> --mode <mode> [options]

modes (exactly one per invocation):
  echo          copy input to --out unchanged
  tone_embed    add a -40 dB 1 kHz tone and write --out
  score_const   print {"score": S} with S from --score (default 0.5)
  score_energy  print {"score": rms-of-input}
  fail          exit 3 with "mock adapter failure" on stderr
  sleep         block for --seconds (default 30)

protocol: exit 0 = success; audio comes back via --out, scores via stdout JSON.
`

function main(argv: string[]): number {
    if (argv.includes('--help') || argv.includes('-h')) {
        process.stdout.write(HELP)
        return 0
    }
    const inv = parseInvocation(argv)
    const mode = (inv.extra.get('--mode') ?? 'echo') as Mode
    if (!MODES.includes(mode)) {
        process.stderr.write(`unknown mode '${mode}'; expected one of: ${MODES.join(', ')}\n`)
        return 1
    }

    switch (mode) {
        case 'echo': {
            if (!inv.outPath) throw new Error('echo mode needs --out')
            fs.copyFileSync(inv.inPath, inv.outPath)
            return 0
        }
        case 'tone_embed': {
            if (!inv.outPath) throw new Error('tone_embed mode needs --out')
            const audio = decodeWav(fs.readFileSync(inv.inPath))
            const amp = Math.pow(10, -40 / 20)
            const w = (2 * Math.PI * 1000) / audio.sampleRate
            for (let i = 0; i < audio.samples.length; i++) {
                audio.samples[i] += amp * Math.sin(w * i)
            }
            fs.writeFileSync(inv.outPath, encodeWavFloat32(audio))
            return 0
        }
        case 'score_const': {
            printScore(Number(inv.extra.get('--score') ?? '0.5'))
            return 0
        }
        case 'score_energy': {
            const audio = decodeWav(fs.readFileSync(inv.inPath))
            let acc = 0
            for (const s of audio.samples) acc += s * s
            printScore(audio.samples.length ? Math.sqrt(acc / audio.samples.length) : 0)
            return 0
        }
        case 'fail': {
            process.stderr.write('mock adapter failure: model missing\n')
            return 3
        }
        case 'sleep': {
            const seconds = Number(inv.extra.get('--seconds') ?? '30')
            const until = Date.now() + seconds * 1000
            while (Date.now() < until) {
                // deliberately busy-wait past the bridge's timeout
            }
            return 0
        }
    }
}

try {
    process.exit(main(process.argv.slice(2)))
} catch (err) {
    process.stderr.write(`${err instanceof Error ? err.message : String(err)}\n`)
    process.exit(1)
}
