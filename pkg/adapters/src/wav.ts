// Minimal mono WAV support for adapters: enough to read what the bench
// writes (float32, pcm16, pcm24) and to write float32 back.

export interface Audio {
    samples: Float64Array
    sampleRate: number
}

export function decodeWav(data: Buffer): Audio {
    if (data.length < 12 || data.toString('latin1', 0, 4) !== 'RIFF') {
        throw new Error('not a RIFF file')
    }
    if (data.toString('latin1', 8, 12) !== 'WAVE') {
        throw new Error('not a WAVE file')
    }
    let pos = 12
    let fmt: { tag: number; channels: number; rate: number; bits: number } | null = null
    let payload: Buffer | null = null
    while (pos + 8 <= data.length) {
        const id = data.toString('latin1', pos, pos + 4)
        const size = data.readUInt32LE(pos + 4)
        const body = pos + 8
        if (body + size > data.length) {
            throw new Error(`chunk ${id.trim()} overruns the file`)
        }
        if (id === 'fmt ') {
            let tag = data.readUInt16LE(body)
            if (tag === 0xfffe && size >= 40) {
                tag = data.readUInt16LE(body + 24) // extensible SubFormat
            }
            fmt = {
                tag,
                channels: data.readUInt16LE(body + 2),
                rate: data.readUInt32LE(body + 4),
                bits: data.readUInt16LE(body + 14),
            }
        } else if (id === 'data') {
            payload = data.subarray(body, body + size)
        }
        pos = body + size + (size & 1)
    }
    if (!fmt) throw new Error('missing fmt chunk')
    if (!payload) throw new Error('missing data chunk')

    const { tag, channels, rate, bits } = fmt
    let interleaved: Float64Array
    if (tag === 3 && bits === 32) {
        const n = payload.length >>> 2
        interleaved = new Float64Array(n)
        for (let i = 0; i < n; i++) interleaved[i] = payload.readFloatLE(i * 4)
    } else if (tag === 1 && bits === 16) {
        const n = payload.length >>> 1
        interleaved = new Float64Array(n)
        for (let i = 0; i < n; i++) interleaved[i] = payload.readInt16LE(i * 2) / 32768
    } else if (tag === 1 && bits === 24) {
        const n = Math.floor(payload.length / 3)
        interleaved = new Float64Array(n)
        for (let i = 0; i < n; i++) {
            let v = payload[3 * i] | (payload[3 * i + 1] << 8) | (payload[3 * i + 2] << 16)
            if (v & 0x800000) v -= 0x1000000
            interleaved[i] = v / 8388608
        }
    } else {
        throw new Error(`unsupported encoding: tag ${tag}, ${bits} bits`)
    }

    if (channels <= 1) return { samples: interleaved, sampleRate: rate }
    const frames = Math.floor(interleaved.length / channels)
    const mono = new Float64Array(frames)
    for (let f = 0; f < frames; f++) {
        let acc = 0
        for (let c = 0; c < channels; c++) acc += interleaved[f * channels + c]
        mono[f] = acc / channels
    }
    return { samples: mono, sampleRate: rate }
}

export function encodeWavFloat32(audio: Audio): Buffer {
    const n = audio.samples.length
    const dataSize = n * 4
    // float fmt chunk carries cbSize=0 plus a fact chunk, per the format spec
    const buf = Buffer.alloc(12 + 8 + 18 + 8 + 4 + 8 + dataSize)
    let p = 0
    p += buf.write('RIFF', p, 'latin1')
    p = buf.writeUInt32LE(buf.length - 8, p)
    p += buf.write('WAVE', p, 'latin1')
    p += buf.write('fmt ', p, 'latin1')
    p = buf.writeUInt32LE(18, p)
    p = buf.writeUInt16LE(3, p) // IEEE float
    p = buf.writeUInt16LE(1, p)
    p = buf.writeUInt32LE(audio.sampleRate, p)
    p = buf.writeUInt32LE(audio.sampleRate * 4, p)
    p = buf.writeUInt16LE(4, p)
    p = buf.writeUInt16LE(32, p)
    p = buf.writeUInt16LE(0, p)
    p += buf.write('fact', p, 'latin1')
    p = buf.writeUInt32LE(4, p)
    p = buf.writeUInt32LE(n, p)
    p += buf.write('data', p, 'latin1')
    p = buf.writeUInt32LE(dataSize, p)
    for (let i = 0; i < n; i++) {
        p = buf.writeFloatLE(Math.fround(audio.samples[i]), p)
    }
    return buf
}
